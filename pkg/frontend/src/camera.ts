/** Orbit camera and the small slice of matrix math the viewer needs.
 *
 * Matrices are column-major Float32Array(16), the layout WebGL uploads
 * directly.  The camera orbits a target point at a fixed distance; yaw
 * spins about +z (the usual up axis for simulation meshes here), pitch
 * tilts toward the poles and is clamped just short of them so the view
 * basis never degenerates.
 */

import { cross, normalize, sub } from "./vec.js";
import type { Vec3 } from "./vec.js";

export type Mat4 = Float32Array;

export interface OrbitCamera {
  target: Vec3;
  distance: number;
  yaw: number; // radians about +z
  pitch: number; // radians from the equator
}

const PITCH_LIMIT = Math.PI / 2 - 0.01;

export function clampPitch(pitch: number): number {
  return Math.min(PITCH_LIMIT, Math.max(-PITCH_LIMIT, pitch));
}

export function eyePosition(cam: OrbitCamera): Vec3 {
  const cp = Math.cos(cam.pitch);
  return [
    cam.target[0] + cam.distance * cp * Math.cos(cam.yaw),
    cam.target[1] + cam.distance * cp * Math.sin(cam.yaw),
    cam.target[2] + cam.distance * Math.sin(cam.pitch),
  ];
}

export function identity(): Mat4 {
  const m = new Float32Array(16);
  m[0] = m[5] = m[10] = m[15] = 1;
  return m;
}

export function multiply(a: Mat4, b: Mat4): Mat4 {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let s = 0;
      for (let k = 0; k < 4; k++) s += a[k * 4 + row] * b[col * 4 + k];
      out[col * 4 + row] = s;
    }
  }
  return out;
}

export function lookAt(eye: Vec3, target: Vec3, up: Vec3): Mat4 {
  const f = normalize(sub(target, eye));
  const s = normalize(cross(f, up));
  const u = cross(s, f);
  const m = new Float32Array(16);
  m[0] = s[0]; m[4] = s[1]; m[8] = s[2];
  m[1] = u[0]; m[5] = u[1]; m[9] = u[2];
  m[2] = -f[0]; m[6] = -f[1]; m[10] = -f[2];
  m[12] = -(s[0] * eye[0] + s[1] * eye[1] + s[2] * eye[2]);
  m[13] = -(u[0] * eye[0] + u[1] * eye[1] + u[2] * eye[2]);
  m[14] = f[0] * eye[0] + f[1] * eye[1] + f[2] * eye[2];
  m[15] = 1;
  return m;
}

export function perspective(fovY: number, aspect: number, near: number, far: number): Mat4 {
  const f = 1 / Math.tan(fovY / 2);
  const m = new Float32Array(16);
  m[0] = f / aspect;
  m[5] = f;
  m[10] = (far + near) / (near - far);
  m[11] = -1;
  m[14] = (2 * far * near) / (near - far);
  return m;
}

export function viewMatrix(cam: OrbitCamera): Mat4 {
  return lookAt(eyePosition(cam), cam.target, [0, 0, 1]);
}

/** Transform a point, returning clip coordinates [x, y, z, w]. */
export function transformPoint(m: Mat4, p: Vec3): [number, number, number, number] {
  return [
    m[0] * p[0] + m[4] * p[1] + m[8] * p[2] + m[12],
    m[1] * p[0] + m[5] * p[1] + m[9] * p[2] + m[13],
    m[2] * p[0] + m[6] * p[1] + m[10] * p[2] + m[14],
    m[3] * p[0] + m[7] * p[1] + m[11] * p[2] + m[15],
  ];
}

/** View-space depth of a world point (positive in front of the camera). */
export function viewDepth(view: Mat4, p: Vec3): number {
  return -(view[2] * p[0] + view[6] * p[1] + view[10] * p[2] + view[14]);
}

/** Fit an orbit camera to an axis-aligned box. */
export function frameBox(lo: Vec3, hi: Vec3): OrbitCamera {
  const target: Vec3 = [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
  const diag = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) || 1;
  return { target, distance: diag * 1.8, yaw: Math.PI / 5, pitch: Math.PI / 8 };
}
