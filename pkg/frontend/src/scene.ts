/** Turn parsed PSLs into attribute buffers the GPU and the software
 * rasterizer both consume.
 *
 * Tube batches carry, per vertex, the section centre and frame so the
 * fragment shader can recover exact section coordinates; cap vertices
 * are flagged to skip the silhouette test.  Long polylines are split
 * into runs that fit 16-bit indices, sharing one point of overlap so
 * the surface stays closed.
 */

import { scalarColor } from "./colors.js";
import type { TransferName } from "./colors.js";
import { framesFromRows, tessellateTube } from "./tubes.js";
import type { Frame } from "./tubes.js";
import type { Psl, PslType } from "./types.js";
import type { Vec3 } from "./vec.js";

export interface TubeBatch {
  position: Float32Array;
  normal: Float32Array;
  color: Float32Array;
  center: Float32Array;
  frameN: Float32Array;
  frameB: Float32Array;
  cap: Float32Array;
  index: Uint16Array;
  radius: number;
  width: number;
}

export interface LineBatch {
  /** Segment soup: two vertices per segment. */
  position: Float32Array;
  color: Float32Array;
}

// 16-bit indices cap a run at 65536 vertices; at most RIBBON_SIDES + 1
// vertices enter per point plus two caps, so 2000 points is safe
const MAX_RUN_POINTS = 2000;

function toVec3s(rows: number[][]): Vec3[] {
  return rows.map((r) => [r[0], r[1], r[2]] as Vec3);
}

export interface ColorScale {
  transfer: TransferName;
  min: number;
  max: number;
}

function pointColor(scale: ColorScale, type: PslType, scalar: number): Vec3 {
  const span = scale.max - scale.min;
  const t = span > 0 ? (scalar - scale.min) / span : 0.5;
  return scalarColor(scale.transfer, type, t);
}

/** One tube batch per polyline run. */
export function buildTubeBatches(
  psl: Psl,
  radius: number,
  width: number,
  sides: number,
  scale: ColorScale,
): TubeBatch[] {
  if (psl.points.length < 2 || !psl.frames) return [];
  const points = toVec3s(psl.points);
  const frames = framesFromRows(psl.frames);
  const out: TubeBatch[] = [];
  for (let start = 0; start < points.length - 1; start += MAX_RUN_POINTS - 1) {
    const stop = Math.min(start + MAX_RUN_POINTS, points.length);
    out.push(
      buildRun(
        points.slice(start, stop),
        frames.slice(start, stop),
        psl.attrs.scalar.slice(start, stop),
        psl.type,
        radius,
        width,
        sides,
        scale,
      ),
    );
    if (stop === points.length) break;
  }
  return out;
}

function buildRun(
  points: Vec3[],
  frames: Frame[],
  scalars: number[],
  type: PslType,
  radius: number,
  width: number,
  sides: number,
  scale: ColorScale,
): TubeBatch {
  const mesh = tessellateTube(points, frames, radius, width, sides);
  const nverts = mesh.vertices.length / 3;
  const npts = points.length;

  const center = new Float32Array(nverts * 3);
  const frameN = new Float32Array(nverts * 3);
  const frameB = new Float32Array(nverts * 3);
  const cap = new Float32Array(nverts);
  const color = new Float32Array(nverts * 3);

  for (let i = 0; i < npts; i++) {
    const col = pointColor(scale, type, scalars[i]);
    const f = frames[i];
    for (let j = 0; j < sides; j++) {
      const v = i * sides + j;
      center.set(points[i], v * 3);
      frameN.set(f.n, v * 3);
      frameB.set(f.b, v * 3);
      color.set(col, v * 3);
    }
  }
  let offset = npts * sides;
  for (const end of [0, npts - 1]) {
    const col = pointColor(scale, type, scalars[end]);
    const f = frames[end];
    for (let k = 0; k <= sides; k++) {
      const v = offset + k;
      center.set(points[end], v * 3);
      frameN.set(f.n, v * 3);
      frameB.set(f.b, v * 3);
      color.set(col, v * 3);
      cap[v] = 1;
    }
    offset += sides + 1;
  }

  return {
    position: Float32Array.from(mesh.vertices),
    normal: Float32Array.from(mesh.normals),
    color,
    center,
    frameN,
    frameB,
    cap,
    index: Uint16Array.from(mesh.triangles),
    radius,
    width,
  };
}

/** Segment soup for PSLs drawn as plain lines. */
export function buildLineBatch(psls: Psl[], scale: ColorScale): LineBatch {
  let nseg = 0;
  for (const p of psls) nseg += Math.max(0, p.points.length - 1);
  const position = new Float32Array(nseg * 6);
  const color = new Float32Array(nseg * 6);
  let o = 0;
  for (const p of psls) {
    for (let i = 0; i + 1 < p.points.length; i++) {
      for (const k of [i, i + 1]) {
        position[o] = p.points[k][0];
        position[o + 1] = p.points[k][1];
        position[o + 2] = p.points[k][2];
        const col = pointColor(scale, p.type, p.attrs.scalar[k]);
        color[o] = col[0];
        color[o + 1] = col[1];
        color[o + 2] = col[2];
        o += 3;
      }
    }
  }
  return { position, color };
}

/** Triangles and outward normals for the translucent bounding hull. */
export function buildHull(lo: Vec3, hi: Vec3): { position: Float32Array; normal: Float32Array } {
  const position: number[] = [];
  const normal: number[] = [];
  const quad = (corners: Vec3[], n: Vec3) => {
    for (const idx of [0, 1, 2, 0, 2, 3]) {
      position.push(...corners[idx]);
      normal.push(...n);
    }
  };
  const [x0, y0, z0] = lo;
  const [x1, y1, z1] = hi;
  quad([[x0, y0, z0], [x0, y1, z0], [x0, y1, z1], [x0, y0, z1]], [-1, 0, 0]);
  quad([[x1, y0, z0], [x1, y0, z1], [x1, y1, z1], [x1, y1, z0]], [1, 0, 0]);
  quad([[x0, y0, z0], [x0, y0, z1], [x1, y0, z1], [x1, y0, z0]], [0, -1, 0]);
  quad([[x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1]], [0, 1, 0]);
  quad([[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0]], [0, 0, -1]);
  quad([[x0, y0, z1], [x0, y1, z1], [x1, y1, z1], [x1, y0, z1]], [0, 0, 1]);
  return { position: Float32Array.from(position), normal: Float32Array.from(normal) };
}
