/** Viewer state: everything the UI can change, in one serializable bag.
 *
 * The renderer and the service client both read from here and never
 * own state themselves, which is what lets a lost WebGL context rebuild
 * the scene exactly and lets a view be shared as a URL.
 */

import { clampPitch } from "./camera.js";
import type { OrbitCamera } from "./camera.js";
import { TRANSFER_NAMES } from "./colors.js";
import type { TransferName } from "./colors.js";
import type { PslType } from "./types.js";
import { PSL_TYPES } from "./types.js";
import type { Vec3 } from "./vec.js";

export const MIN_WIDTH = 0.05;
export const MAX_WIDTH = 1.0;

export interface ExtractionSettings {
  mesh: string;
  eps: number;
  levels: number;
  types: PslType[];
  strategy: string;
  scheme: string;
}

export interface ViewState {
  camera: OrbitCamera;
  /** Per-type level-of-detail slider, 1..levels of the last document. */
  lod: Record<PslType, number>;
  focus: PslType;
  context: PslType;
  /** Ribbon when true, plain line strip when false. */
  ribbon: Record<PslType, boolean>;
  enabled: Record<PslType, boolean>;
  scalar: string;
  transfer: TransferName;
  /** Section width ratio: 1 is a circular tube, small is a flat ribbon. */
  width: number;
  depthCue: number;
  showHull: boolean;
  extraction: ExtractionSettings;
}

export function defaultState(): ViewState {
  return {
    camera: { target: [0.5, 0.5, 0.5], distance: 3, yaw: Math.PI / 5, pitch: Math.PI / 8 },
    lod: { major: 3, medium: 3, minor: 3 },
    focus: "major",
    context: "minor",
    ribbon: { major: true, medium: true, minor: true },
    enabled: { major: true, medium: true, minor: true },
    scalar: "vm",
    transfer: "type",
    width: 1.0,
    depthCue: 0.5,
    showHull: true,
    extraction: {
      mesh: "",
      eps: 0.5,
      levels: 3,
      types: ["major", "medium", "minor"],
      strategy: "volume",
      scheme: "rk4",
    },
  };
}

function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}

/** Enforce every range invariant in place and return the state.
 *
 * maxLevels is the level count of the most recent document; LoD sliders
 * can never point past it.
 */
export function clampState(s: ViewState, maxLevels: number): ViewState {
  s.width = clamp(s.width, MIN_WIDTH, MAX_WIDTH);
  s.depthCue = clamp(s.depthCue, 0, 1);
  s.camera.distance = Math.max(s.camera.distance, 1e-6);
  s.camera.pitch = clampPitch(s.camera.pitch);
  const top = Math.max(1, Math.floor(maxLevels));
  for (const t of PSL_TYPES) {
    s.lod[t] = clamp(Math.round(s.lod[t]), 1, top);
  }
  s.extraction.levels = clamp(Math.round(s.extraction.levels), 1, 8);
  s.extraction.eps = Math.max(s.extraction.eps, 1e-6);
  if (s.extraction.types.length === 0) s.extraction.types = [s.focus];
  return s;
}

function num(q: URLSearchParams, key: string, fallback: number): number {
  const raw = q.get(key);
  if (raw === null) return fallback;
  const v = Number(raw);
  return Number.isFinite(v) ? v : fallback;
}

function typeList(raw: string | null): PslType[] | null {
  if (raw === null) return null;
  const parts = raw.split(",").filter((t) => PSL_TYPES.includes(t as PslType));
  return parts.length ? (parts as PslType[]) : null;
}

/** Read a view state from URL query parameters, over the defaults. */
export function stateFromQuery(q: URLSearchParams): ViewState {
  const s = defaultState();
  const cam = q.get("cam");
  if (cam !== null) {
    const parts = cam.split(",").map(Number);
    if (parts.length === 6 && parts.every(Number.isFinite)) {
      s.camera = {
        target: [parts[0], parts[1], parts[2]] as Vec3,
        distance: parts[3],
        yaw: parts[4],
        pitch: parts[5],
      };
    }
  }
  const lod = q.get("lod");
  if (lod !== null) {
    const parts = lod.split(",").map(Number);
    if (parts.length === 3 && parts.every(Number.isFinite)) {
      s.lod = { major: parts[0], medium: parts[1], minor: parts[2] };
    }
  }
  const focus = q.get("focus");
  if (focus !== null && PSL_TYPES.includes(focus as PslType)) s.focus = focus as PslType;
  const context = q.get("context");
  if (context !== null && PSL_TYPES.includes(context as PslType)) s.context = context as PslType;
  const ribbon = typeList(q.get("ribbon"));
  if (q.get("ribbon") !== null) {
    s.ribbon = { major: false, medium: false, minor: false };
    for (const t of ribbon ?? []) s.ribbon[t] = true;
  }
  const enabled = typeList(q.get("show"));
  if (q.get("show") !== null) {
    s.enabled = { major: false, medium: false, minor: false };
    for (const t of enabled ?? []) s.enabled[t] = true;
  }
  const scalar = q.get("scalar");
  if (scalar !== null && scalar !== "") s.scalar = scalar;
  const tf = q.get("tf");
  if (tf !== null && TRANSFER_NAMES.includes(tf as TransferName)) s.transfer = tf as TransferName;
  s.width = num(q, "w", s.width);
  s.depthCue = num(q, "cue", s.depthCue);
  const hull = q.get("hull");
  if (hull !== null) s.showHull = hull !== "0";

  const ex = s.extraction;
  const mesh = q.get("mesh");
  if (mesh !== null) ex.mesh = mesh;
  ex.eps = num(q, "eps", ex.eps);
  ex.levels = num(q, "levels", ex.levels);
  const types = typeList(q.get("types"));
  if (types !== null) ex.types = types;
  const strategy = q.get("strategy");
  if (strategy !== null && strategy !== "") ex.strategy = strategy;
  const scheme = q.get("scheme");
  if (scheme !== null && scheme !== "") ex.scheme = scheme;
  return clampState(s, Math.max(s.extraction.levels, ...PSL_TYPES.map((t) => s.lod[t])));
}

function round(x: number, digits = 4): string {
  return String(Number(x.toFixed(digits)));
}

/** Serialize a view state into URL query parameters. */
export function stateToQuery(s: ViewState): URLSearchParams {
  const q = new URLSearchParams();
  const c = s.camera;
  q.set(
    "cam",
    [c.target[0], c.target[1], c.target[2], c.distance, c.yaw, c.pitch].map((v) => round(v)).join(","),
  );
  q.set("lod", PSL_TYPES.map((t) => String(s.lod[t])).join(","));
  q.set("focus", s.focus);
  q.set("context", s.context);
  q.set("ribbon", PSL_TYPES.filter((t) => s.ribbon[t]).join(","));
  q.set("show", PSL_TYPES.filter((t) => s.enabled[t]).join(","));
  q.set("scalar", s.scalar);
  q.set("tf", s.transfer);
  q.set("w", round(s.width));
  q.set("cue", round(s.depthCue));
  q.set("hull", s.showHull ? "1" : "0");
  if (s.extraction.mesh) q.set("mesh", s.extraction.mesh);
  q.set("eps", round(s.extraction.eps, 6));
  q.set("levels", String(s.extraction.levels));
  q.set("types", s.extraction.types.join(","));
  q.set("strategy", s.extraction.strategy);
  q.set("scheme", s.extraction.scheme);
  return q;
}
