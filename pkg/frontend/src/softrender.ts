/** Software rasterizer over tube batches.
 *
 * A small, exact stand-in for the GL pipeline: perspective-correct
 * varyings, a z-buffer, and the same per-fragment silhouette function
 * the shader runs.  Tests drive it to check view-dependent guarantees
 * (ribbons never vanish while orbiting, outline halos stay bounded)
 * without a GPU in the loop.
 */

import { transformPoint } from "./camera.js";
import type { Mat4 } from "./camera.js";
import { shaderPosition } from "./silhouette.js";
import type { TubeBatch } from "./scene.js";
import type { Vec3 } from "./vec.js";

export interface RasterResult {
  width: number;
  height: number;
  /** 1 where any tube fragment landed. */
  covered: Uint8Array;
  /** Silhouette position of the frontmost fragment, 0 elsewhere. */
  pos: Float32Array;
  depth: Float32Array;
}

export function rasterizeTubes(
  batches: TubeBatch[],
  view: Mat4,
  proj: Mat4,
  cameraPos: Vec3,
  width: number,
  height: number,
): RasterResult {
  const vp = multiply4(proj, view);
  const covered = new Uint8Array(width * height);
  const pos = new Float32Array(width * height);
  const depth = new Float32Array(width * height).fill(Infinity);

  for (const batch of batches) {
    const idx = batch.index;
    for (let t = 0; t < idx.length; t += 3) {
      rasterTriangle(batch, idx[t], idx[t + 1], idx[t + 2], vp, cameraPos, width, height, covered, pos, depth);
    }
  }
  return { width, height, covered, pos, depth };
}

function multiply4(a: Mat4, b: Mat4): Mat4 {
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

function rasterTriangle(
  batch: TubeBatch,
  i0: number,
  i1: number,
  i2: number,
  vp: Mat4,
  cameraPos: Vec3,
  width: number,
  height: number,
  covered: Uint8Array,
  posBuf: Float32Array,
  depthBuf: Float32Array,
): void {
  const ids = [i0, i1, i2];
  const sx = new Float64Array(3);
  const sy = new Float64Array(3);
  const sz = new Float64Array(3);
  const invW = new Float64Array(3);
  for (let k = 0; k < 3; k++) {
    const v = ids[k] * 3;
    const clip = transformPoint(vp, [batch.position[v], batch.position[v + 1], batch.position[v + 2]]);
    if (clip[3] <= 1e-9) return; // behind the camera, tests keep geometry in front
    invW[k] = 1 / clip[3];
    sx[k] = (clip[0] * invW[k] * 0.5 + 0.5) * width;
    sy[k] = (clip[1] * invW[k] * 0.5 + 0.5) * height;
    sz[k] = clip[2] * invW[k];
  }

  let area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0]);
  if (area === 0) return;
  const flip = area < 0 ? -1 : 1;
  area *= flip;

  const minX = Math.max(0, Math.floor(Math.min(sx[0], sx[1], sx[2])));
  const maxX = Math.min(width - 1, Math.ceil(Math.max(sx[0], sx[1], sx[2])));
  const minY = Math.max(0, Math.floor(Math.min(sy[0], sy[1], sy[2])));
  const maxY = Math.min(height - 1, Math.ceil(Math.max(sy[0], sy[1], sy[2])));

  for (let py = minY; py <= maxY; py++) {
    for (let px = minX; px <= maxX; px++) {
      const x = px + 0.5;
      const y = py + 0.5;
      const e0 = flip * ((sx[1] - x) * (sy[2] - y) - (sy[1] - y) * (sx[2] - x));
      const e1 = flip * ((sx[2] - x) * (sy[0] - y) - (sy[2] - y) * (sx[0] - x));
      const e2 = flip * ((sx[0] - x) * (sy[1] - y) - (sy[0] - y) * (sx[1] - x));
      if (e0 < 0 || e1 < 0 || e2 < 0) continue;
      const l0 = e0 / area;
      const l1 = e1 / area;
      const l2 = e2 / area;

      const z = l0 * sz[0] + l1 * sz[1] + l2 * sz[2];
      const at = py * width + px;
      if (z >= depthBuf[at]) continue;

      // perspective-correct varyings
      const wInterp = l0 * invW[0] + l1 * invW[1] + l2 * invW[2];
      const c0 = (l0 * invW[0]) / wInterp;
      const c1 = (l1 * invW[1]) / wInterp;
      const c2 = (l2 * invW[2]) / wInterp;

      const lerp3 = (buf: Float32Array): Vec3 => {
        const a = ids[0] * 3;
        const b = ids[1] * 3;
        const c = ids[2] * 3;
        return [
          c0 * buf[a] + c1 * buf[b] + c2 * buf[c],
          c0 * buf[a + 1] + c1 * buf[b + 1] + c2 * buf[c + 1],
          c0 * buf[a + 2] + c1 * buf[b + 2] + c2 * buf[c + 2],
        ];
      };
      const world = lerp3(batch.position);
      const centre = lerp3(batch.center);
      const fn = lerp3(batch.frameN);
      const fb = lerp3(batch.frameB);
      const cap = c0 * batch.cap[ids[0]] + c1 * batch.cap[ids[1]] + c2 * batch.cap[ids[2]];

      let p = 0;
      if (cap < 0.5) {
        const toSection = (q: Vec3): [number, number] => {
          const dx = q[0] - centre[0];
          const dy = q[1] - centre[1];
          const dz = q[2] - centre[2];
          return [
            (dx * fn[0] + dy * fn[1] + dz * fn[2]) / batch.radius,
            (dx * fb[0] + dy * fb[1] + dz * fb[2]) / batch.radius,
          ];
        };
        p = shaderPosition(toSection(world), toSection(cameraPos), batch.width);
      }

      depthBuf[at] = z;
      covered[at] = 1;
      posBuf[at] = p;
    }
  }
}

/** Count of pixels any fragment covered. */
export function coverage(r: RasterResult): number {
  let n = 0;
  for (const c of r.covered) if (c) n++;
  return n;
}
