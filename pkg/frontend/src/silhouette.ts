/** Exact silhouette math for swept elliptical sections.
 *
 * In section coordinates the tube boundary is the conic
 * x^2/w^2 + y^2 = 1.  Both silhouette points for a camera c come from
 * splitting the degenerate conic through the polar line of c into its
 * rank-1 form, so there is no iteration and the shader side can run the
 * same arithmetic per fragment.  silhouettePosition maps any section
 * point to [0, 1], hitting 1 exactly on the silhouette; the fragment
 * shader paints outlines where it exceeds OUTLINE_THRESHOLD.
 */

import type { Vec2, Vec3 } from "./vec.js";

export const OUTLINE_THRESHOLD = 0.95;

type Mat3 = [Vec3, Vec3, Vec3];

function crossMatrix(l: Vec3): Mat3 {
  return [
    [0, l[2], -l[1]],
    [-l[2], 0, l[0]],
    [l[1], -l[0], 0],
  ];
}

function matMul(a: Mat3, b: Mat3): Mat3 {
  const out: Mat3 = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return out;
}

function transpose(a: Mat3): Mat3 {
  return [
    [a[0][0], a[1][0], a[2][0]],
    [a[0][1], a[1][1], a[2][1]],
    [a[0][2], a[1][2], a[2][2]],
  ];
}

function polarLine(c: Vec2, width: number): Vec3 {
  return [c[0] / (width * width), c[1], -1];
}

function requireOutside(c: Vec2, width: number): void {
  const cx = c[0] / width;
  if (!(cx * cx + c[1] * c[1] > 1)) {
    throw new Error("camera must lie strictly outside the section ellipse");
  }
}

/** Both silhouette points of the section ellipse, rows sorted
 * lexicographically so the result is deterministic. */
export function silhouetteTangentPoints(c: Vec2, width = 1): [Vec2, Vec2] {
  requireOutside(c, width);
  const A: Mat3 = [
    [1 / (width * width), 0, 0],
    [0, 1, 0],
    [0, 0, -1],
  ];
  const l = polarLine(c, width);
  const M = crossMatrix(l);
  const B = matMul(matMul(transpose(M), A), M);

  let tau = 0;
  for (let k = 1; k < 3; k++) {
    if (Math.abs(l[k]) > Math.abs(l[tau])) tau = k;
  }
  const keep = [0, 1, 2].filter((k) => k !== tau);
  const m00 = B[keep[0]][keep[0]];
  const m01 = B[keep[0]][keep[1]];
  const m10 = B[keep[1]][keep[0]];
  const m11 = B[keep[1]][keep[1]];
  const disc = -(m00 * m11 - m01 * m10);
  const alpha = Math.sqrt(Math.max(disc, 0)) / l[tau];

  const C: Mat3 = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  let bi = 0;
  let bj = 0;
  let best = -1;
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      C[i][j] = B[i][j] + alpha * M[i][j];
      if (Math.abs(C[i][j]) > best) {
        best = Math.abs(C[i][j]);
        bi = i;
        bj = j;
      }
    }
  }
  const p: Vec2 = [C[bi][0] / C[bi][2], C[bi][1] / C[bi][2]];
  const q: Vec2 = [C[0][bj] / C[2][bj], C[1][bj] / C[2][bj]];
  if (p[0] < q[0] || (p[0] === q[0] && p[1] <= q[1])) return [p, q];
  return [q, p];
}

/** How close a section point sits to the silhouette, in [0, 1].
 *
 * 1 at either silhouette point, 0 where the view ray crosses the middle
 * of the chord between them; rays parallel to the chord clamp to 1.
 */
export function silhouettePosition(p: Vec2, c: Vec2, width = 1): number {
  const scale = Math.max(1, Math.hypot(c[0], c[1]));
  if (Math.hypot(p[0] - c[0], p[1] - c[1]) < 1e-12 * scale) {
    throw new Error("section point coincides with the camera");
  }
  const [t1, t2] = silhouetteTangentPoints(c, width);
  const l = polarLine(c, width);
  // join = (c, 1) x (p, 1), meet = l x join, all homogeneous
  const join: Vec3 = [c[1] - p[1], p[0] - c[0], c[0] * p[1] - c[1] * p[0]];
  const meet: Vec3 = [
    l[1] * join[2] - l[2] * join[1],
    l[2] * join[0] - l[0] * join[2],
    l[0] * join[1] - l[1] * join[0],
  ];
  if (Math.abs(meet[2]) <= 1e-14 * Math.max(Math.abs(meet[0]), Math.abs(meet[1]), 1)) {
    return 1;
  }
  const hit: Vec2 = [meet[0] / meet[2], meet[1] / meet[2]];
  const s =
    Math.hypot(hit[0] - t1[0], hit[1] - t1[1]) /
    Math.hypot(t2[0] - t1[0], t2[1] - t1[1]);
  return Math.min(Math.abs(2 * s - 1), 1);
}

/** Tangent points via the trigonometric construction the shader uses.
 *
 * The polar line of the camera meets the ellipse (w cos t, sin t) where
 * R cos(t - phi0) = 1, with (R, phi0) the polar form of (cx/w, cy).
 * Algebraically identical to silhouetteTangentPoints; kept separate so
 * the GLSL can be twin-tested from node.
 */
export function silhouetteTangentPointsTrig(c: Vec2, width = 1): [Vec2, Vec2] {
  requireOutside(c, width);
  const cwx = c[0] / width;
  const R = Math.hypot(cwx, c[1]);
  const phi0 = Math.atan2(c[1], cwx);
  const dth = Math.acos(Math.min(1, Math.max(-1, 1 / R)));
  const p: Vec2 = [width * Math.cos(phi0 - dth), Math.sin(phi0 - dth)];
  const q: Vec2 = [width * Math.cos(phi0 + dth), Math.sin(phi0 + dth)];
  if (p[0] < q[0] || (p[0] === q[0] && p[1] <= q[1])) return [p, q];
  return [q, p];
}

/** Operation-for-operation twin of the silhouettePos GLSL function.
 *
 * Semantics differ from silhouettePosition only where the shader has
 * to stay total: a camera inside the ellipse returns 0 instead of
 * throwing, and the parallel-ray guard uses the shader's float32-scale
 * tolerance.
 */
export function shaderPosition(p: Vec2, c: Vec2, width: number): number {
  const cwx = c[0] / width;
  const R2 = cwx * cwx + c[1] * c[1];
  if (R2 <= 1) return 0;
  const R = Math.sqrt(R2);
  const phi0 = Math.atan2(c[1], cwx);
  const dth = Math.acos(Math.min(1, Math.max(-1, 1 / R)));
  const t1: Vec2 = [width * Math.cos(phi0 - dth), Math.sin(phi0 - dth)];
  const t2: Vec2 = [width * Math.cos(phi0 + dth), Math.sin(phi0 + dth)];
  const l: Vec2 = [c[0] / (width * width), c[1]];
  const d: Vec2 = [p[0] - c[0], p[1] - c[1]];
  const denom = l[0] * d[0] + l[1] * d[1];
  const lim = 1e-6 * (Math.abs(l[0]) + Math.abs(l[1])) * Math.hypot(d[0], d[1]);
  if (Math.abs(denom) <= lim) return 1;
  const sl = (1 - (l[0] * c[0] + l[1] * c[1])) / denom;
  const hit: Vec2 = [c[0] + sl * d[0], c[1] + sl * d[1]];
  const s =
    Math.hypot(hit[0] - t1[0], hit[1] - t1[1]) /
    Math.hypot(t2[0] - t1[0], t2[1] - t1[1]);
  return Math.min(Math.abs(2 * s - 1), 1);
}

/** Camera position in section coordinates of a frame (n, b) at x. */
export function projectCamera(
  camera: Vec3,
  x: Vec3,
  n: Vec3,
  b: Vec3,
  radius: number,
): Vec2 {
  const d: Vec3 = [camera[0] - x[0], camera[1] - x[1], camera[2] - x[2]];
  return [
    (d[0] * n[0] + d[1] * n[1] + d[2] * n[2]) / radius,
    (d[0] * b[0] + d[1] * b[1] + d[2] * b[2]) / radius,
  ];
}
