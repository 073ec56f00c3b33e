/** Tube tessellation, mirroring the extraction service's geometry.
 *
 * The service ships one frame row [nx, ny, nz, bx, by, bz] per polyline
 * point; the tangent is recovered as t = n x b.  The swept section is
 * the ellipse p(phi) = x + r (w cos(phi) n + sin(phi) b): a circular
 * tube at w = 1, a flat ribbon as w shrinks.  Vertex and triangle
 * ordering is kept bit-compatible with the service's own tessellator so
 * the two can be pinned against each other in tests.
 */

import { cross, dot, normalize, sub } from "./vec.js";
import type { Vec3 } from "./vec.js";

export const TUBE_SIDES = 16;
export const RIBBON_SIDES = 24;
export const MIN_RIBBON_WIDTH = 0.15;

const PARALLEL_TOL = 1e-8;

export interface Frame {
  n: Vec3;
  b: Vec3;
  t: Vec3;
}

export interface TubeMesh {
  vertices: Float64Array; // v * 3
  normals: Float64Array; // v * 3, unit
  triangles: Uint32Array; // f * 3
}

/** Frames from exchange rows [nx, ny, nz, bx, by, bz]. */
export function framesFromRows(rows: number[][]): Frame[] {
  return rows.map((row) => {
    if (row.length !== 6) throw new Error("frame rows carry six numbers");
    const n: Vec3 = [row[0], row[1], row[2]];
    const b: Vec3 = [row[3], row[4], row[5]];
    return { n, b, t: cross(n, b) };
  });
}

function tangents(points: Vec3[]): Vec3[] {
  const n = points.length;
  const out: Vec3[] = new Array(n);
  out[0] = sub(points[1], points[0]);
  out[n - 1] = sub(points[n - 1], points[n - 2]);
  for (let i = 1; i < n - 1; i++) out[i] = sub(points[i + 1], points[i - 1]);
  return out.map((t) => {
    const len = Math.hypot(t[0], t[1], t[2]);
    if (len === 0) throw new Error("polyline contains coincident neighbouring points");
    return [t[0] / len, t[1] / len, t[2] / len] as Vec3;
  });
}

function reject(a: Vec3, t: Vec3): Vec3 {
  const d = dot(a, t);
  return [a[0] - d * t[0], a[1] - d * t[1], a[2] - d * t[2]];
}

/** Orthonormal frames along a polyline.
 *
 * align supplies the vector whose in-plane projection defines n, with
 * parallel-transport fallback where the two are nearly parallel, and
 * consecutive normals sign-aligned to stay on one side of the curve.
 */
export function framesFor(points: Vec3[], align: Vec3[]): Frame[] {
  if (points.length < 2) throw new Error("need at least two 3d points");
  if (align.length !== points.length) {
    throw new Error("alignment field must match the points");
  }
  const tang = tangents(points);
  const out: Frame[] = [];
  let prevN: Vec3 | null = null;
  for (let i = 0; i < points.length; i++) {
    const t = tang[i];
    let proj = reject(align[i], t);
    if (Math.hypot(proj[0], proj[1], proj[2]) < PARALLEL_TOL) {
      if (prevN !== null) proj = reject(prevN, t);
      if (prevN === null || Math.hypot(proj[0], proj[1], proj[2]) < PARALLEL_TOL) {
        // align runs along the tangent with no history to transport
        const axis: Vec3 = [0, 0, 0];
        let k = 0;
        if (Math.abs(t[1]) < Math.abs(t[k])) k = 1;
        if (Math.abs(t[2]) < Math.abs(t[k])) k = 2;
        axis[k] = 1;
        proj = reject(axis, t);
      }
    }
    let n = normalize(proj);
    if (prevN !== null && dot(n, prevN) < 0) n = [-n[0], -n[1], -n[2]];
    const b = cross(t, n);
    out.push({ n, b, t });
    prevN = n;
  }
  return out;
}

/** Closed triangle mesh sweeping an ellipse along the polyline.
 *
 * Section normals follow the ellipse gradient (cos(phi)/w, sin(phi)) in
 * frame coordinates; both ends get flat fans over a duplicated ring so
 * the cap normal stays crisp.
 */
export function tessellateTube(
  points: Vec3[],
  frames: Frame[],
  radius: number,
  width = 1,
  sides = TUBE_SIDES,
): TubeMesh {
  const npts = points.length;
  if (npts < 2) throw new Error("a tube needs at least two points");
  if (frames.length !== npts) throw new Error("frames must match the points");
  if (!(radius > 0)) throw new Error("radius must be positive");
  if (!(width > 0)) throw new Error("width must be positive");
  if (sides < 3) throw new Error("sides must be at least 3");

  const nverts = npts * sides + 2 * (sides + 1);
  const vertices = new Float64Array(nverts * 3);
  const normals = new Float64Array(nverts * 3);
  const triangles = new Uint32Array(((npts - 1) * sides * 2 + 2 * sides) * 3);

  const cosp = new Float64Array(sides);
  const sinp = new Float64Array(sides);
  for (let j = 0; j < sides; j++) {
    const phi = (2 * Math.PI * j) / sides;
    cosp[j] = Math.cos(phi);
    sinp[j] = Math.sin(phi);
  }

  for (let i = 0; i < npts; i++) {
    const p = points[i];
    const { n, b } = frames[i];
    for (let j = 0; j < sides; j++) {
      const v = (i * sides + j) * 3;
      for (let k = 0; k < 3; k++) {
        vertices[v + k] = p[k] + radius * (width * cosp[j] * n[k] + sinp[j] * b[k]);
      }
      const gx = (cosp[j] / width) * n[0] + sinp[j] * b[0];
      const gy = (cosp[j] / width) * n[1] + sinp[j] * b[1];
      const gz = (cosp[j] / width) * n[2] + sinp[j] * b[2];
      const glen = Math.sqrt(gx * gx + gy * gy + gz * gz);
      normals[v] = gx / glen;
      normals[v + 1] = gy / glen;
      normals[v + 2] = gz / glen;
    }
  }

  let ti = 0;
  for (let i = 0; i < npts - 1; i++) {
    const base = i * sides;
    const nxt = (i + 1) * sides;
    for (let j = 0; j < sides; j++) {
      const j1 = (j + 1) % sides;
      const a = base + j;
      const b = base + j1;
      const c = nxt + j1;
      const d = nxt + j;
      triangles[ti++] = a;
      triangles[ti++] = b;
      triangles[ti++] = c;
      triangles[ti++] = a;
      triangles[ti++] = c;
      triangles[ti++] = d;
    }
  }

  let offset = npts * sides;
  for (const [end, sign] of [
    [0, -1],
    [npts - 1, 1],
  ] as const) {
    const centre = points[end];
    const t = frames[end].t;
    const axis: Vec3 = [sign * t[0], sign * t[1], sign * t[2]];
    const cid = offset;
    for (let k = 0; k < 3; k++) {
      vertices[cid * 3 + k] = centre[k];
      normals[cid * 3 + k] = axis[k];
    }
    for (let j = 0; j < sides; j++) {
      const src = (end * sides + j) * 3;
      const dst = (cid + 1 + j) * 3;
      for (let k = 0; k < 3; k++) {
        vertices[dst + k] = vertices[src + k];
        normals[dst + k] = axis[k];
      }
    }
    for (let j = 0; j < sides; j++) {
      const j1 = (j + 1) % sides;
      if (sign < 0) {
        triangles[ti++] = cid;
        triangles[ti++] = cid + 1 + j1;
        triangles[ti++] = cid + 1 + j;
      } else {
        triangles[ti++] = cid;
        triangles[ti++] = cid + 1 + j;
        triangles[ti++] = cid + 1 + j1;
      }
    }
    offset += sides + 1;
  }

  return { vertices, normals, triangles };
}
