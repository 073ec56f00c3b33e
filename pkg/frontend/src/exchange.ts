/** Parse and slice exchange documents.
 *
 * Documents arrive either as the payload of an extract reply or as a
 * dropped/opened JSON file.  Validation is strict about the fields the
 * renderer depends on so a malformed file fails the drop with a usable
 * message instead of exploding mid-draw.
 */

import type { ExchangeDocument, Psl, PslType } from "./types.js";
import { PSL_TYPES } from "./types.js";

function fail(msg: string): Error {
  return new Error(`invalid exchange document: ${msg}`);
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function checkPointRows(rows: unknown, width: number, what: string): number[][] {
  if (!Array.isArray(rows) || rows.length === 0) throw fail(`${what} must be a non-empty array`);
  for (const row of rows) {
    if (!Array.isArray(row) || row.length !== width || !row.every(isFiniteNumber)) {
      throw fail(`${what} rows must hold ${width} finite numbers`);
    }
  }
  return rows as number[][];
}

export function parseDocument(source: string | unknown): ExchangeDocument {
  let raw: unknown;
  if (typeof source === "string") {
    try {
      raw = JSON.parse(source);
    } catch {
      throw fail("not JSON");
    }
  } else {
    raw = source;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw fail("top level must be an object");
  }
  const doc = raw as Record<string, unknown>;
  if (doc.version !== 1) throw fail("unsupported version");
  if (!isFiniteNumber(doc.d0) || doc.d0 <= 0) throw fail("d0 must be positive");
  const bbox = doc.bbox;
  if (!Array.isArray(bbox) || bbox.length !== 2) throw fail("bbox must hold two corners");
  checkPointRows(bbox, 3, "bbox");
  if (!Array.isArray(doc.psls)) throw fail("psls must be an array");

  const psls: Psl[] = [];
  for (const entry of doc.psls) {
    if (typeof entry !== "object" || entry === null) throw fail("psl entries must be objects");
    const p = entry as Record<string, unknown>;
    for (const key of ["id", "type", "level", "seed_index", "points", "attrs"]) {
      if (!(key in p)) throw fail(`psl entry missing ${key}`);
    }
    if (!PSL_TYPES.includes(p.type as PslType)) throw fail(`unknown psl type ${String(p.type)}`);
    if (!Number.isInteger(p.id) || !Number.isInteger(p.level) || !Number.isInteger(p.seed_index)) {
      throw fail("id, level and seed_index must be integers");
    }
    const points = checkPointRows(p.points, 3, "points");
    const attrs = p.attrs as Record<string, unknown>;
    if (typeof attrs !== "object" || attrs === null) throw fail("attrs must be an object");
    for (const key of ["sigma1", "sigma2", "sigma3", "deg", "scalar"]) {
      const col = attrs[key];
      if (!Array.isArray(col) || col.length !== points.length || !col.every(isFiniteNumber)) {
        throw fail(`attrs.${key} must hold one number per point`);
      }
    }
    let frames: number[][] | undefined;
    if (p.frames !== undefined && p.frames !== null) {
      frames = checkPointRows(p.frames, 6, "frames");
      if (frames.length !== points.length) throw fail("frames must hold one row per point");
    }
    psls.push({
      id: p.id as number,
      type: p.type as PslType,
      level: p.level as number,
      seed_index: p.seed_index as number,
      points,
      attrs: attrs as unknown as Psl["attrs"],
      frames,
    });
  }
  return {
    version: 1,
    d0: doc.d0 as number,
    bbox: bbox as [number[], number[]],
    psls,
  };
}

/** Highest level of detail present in the document (0 when empty). */
export function maxLevel(doc: ExchangeDocument): number {
  let m = 0;
  for (const p of doc.psls) if (p.level > m) m = p.level;
  return m;
}

/** Lines visible at the given resolution, in document order.
 *
 * Matches the service's own level slicing: a line tagged with level k
 * is a member of every level >= k, so slicing locally and re-requesting
 * at a coarser level give the same id sets.
 */
export function lodSlice(doc: ExchangeDocument, level: number): Psl[] {
  return doc.psls.filter((p) => p.level <= level);
}

/** Per-type slice used by the renderer: each type at its own level. */
export function visiblePsls(
  doc: ExchangeDocument,
  levels: Record<PslType, number>,
  enabled: Record<PslType, boolean>,
): Psl[] {
  return doc.psls.filter((p) => enabled[p.type] && p.level <= levels[p.type]);
}

export interface ScalarRange {
  min: number;
  max: number;
}

/** Range of the chosen scalar over the visible lines (for color maps). */
export function scalarRange(psls: Psl[]): ScalarRange {
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of psls) {
    for (const v of p.attrs.scalar) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo > hi) return { min: 0, max: 1 };
  if (lo === hi) return { min: lo, max: lo + 1 };
  return { min: lo, max: hi };
}
