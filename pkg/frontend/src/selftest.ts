/** In-browser check that the GPU silhouette agrees with the CPU one.
 *
 * Renders a straight tube and a curved one with a diagnostic fragment
 * shader that packs the silhouette position into two color channels
 * (16-bit fixed point), reads the pixels back, and rasterizes the same
 * batches in software.  Pixels whose 3x3 neighbourhood is covered by
 * both renderers must agree to 1e-3; coverage edges are excluded since
 * GL and the software rasterizer tie-break boundary pixels differently.
 */

import { perspective, viewMatrix } from "./camera.js";
import type { OrbitCamera } from "./camera.js";
import { buildTubeBatches } from "./scene.js";
import type { TubeBatch } from "./scene.js";
import { TUBE_FRAGMENT_SELFTEST, TUBE_VERTEX } from "./shaders.js";
import { rasterizeTubes } from "./softrender.js";
import { framesFor } from "./tubes.js";
import type { Psl } from "./types.js";
import type { Vec3 } from "./vec.js";

const SIZE = 256;
const TOLERANCE = 1e-3;

export interface SelfTestReport {
  ok: boolean;
  compared: number;
  worst: number;
  lines: string[];
}

function syntheticPsl(points: Vec3[], align: Vec3[]): Psl {
  const frames = framesFor(points, align);
  return {
    id: 0,
    type: "major",
    level: 1,
    seed_index: 0,
    points: points.map((p) => [...p]),
    attrs: {
      sigma1: points.map(() => 1),
      sigma2: points.map(() => 0.5),
      sigma3: points.map(() => 0),
      deg: points.map(() => 1),
      scalar: points.map(() => 1),
    },
    frames: frames.map((f) => [...f.n, ...f.b]),
  };
}

function cases(): { batch: TubeBatch; camera: OrbitCamera; label: string }[] {
  const straight = syntheticPsl(
    [
      [-1, 0, 0],
      [1, 0, 0],
    ],
    [
      [0, 1, 0],
      [0, 1, 0],
    ],
  );
  const bentPts: Vec3[] = [
    [-1, -0.3, 0],
    [-0.3, 0.1, 0.1],
    [0.4, -0.1, -0.1],
    [1, 0.3, 0],
  ];
  const bent = syntheticPsl(bentPts, bentPts.map(() => [0, 1, 0.2] as Vec3));
  const scale = { transfer: "type" as const, min: 0, max: 1 };
  const out = [];
  for (const [psl, label] of [
    [straight, "straight"],
    [bent, "bent"],
  ] as const) {
    for (const width of [1.0, 0.3]) {
      const batch = buildTubeBatches(psl, 0.25, width, 16, scale)[0];
      out.push({
        batch,
        camera: {
          target: [0, 0, 0] as Vec3,
          distance: 4,
          yaw: Math.PI / 7,
          pitch: Math.PI / 9,
        },
        label: `${label} w=${width}`,
      });
    }
  }
  return out;
}

export function runSelfTest(canvas: HTMLCanvasElement): SelfTestReport {
  canvas.width = SIZE;
  canvas.height = SIZE;
  const gl = canvas.getContext("webgl", { antialias: false, alpha: false, preserveDrawingBuffer: true });
  if (!gl) return { ok: false, compared: 0, worst: 0, lines: ["WebGL is not available"] };

  const prog = gl.createProgram()!;
  for (const [kind, src] of [
    [gl.VERTEX_SHADER, TUBE_VERTEX],
    [gl.FRAGMENT_SHADER, TUBE_FRAGMENT_SELFTEST],
  ] as const) {
    const sh = gl.createShader(kind)!;
    gl.shaderSource(sh, src);
    gl.compileShader(sh);
    if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
      return { ok: false, compared: 0, worst: 0, lines: [gl.getShaderInfoLog(sh) ?? "compile failed"] };
    }
    gl.attachShader(prog, sh);
  }
  gl.linkProgram(prog);
  if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
    return { ok: false, compared: 0, worst: 0, lines: [gl.getProgramInfoLog(prog) ?? "link failed"] };
  }
  gl.useProgram(prog);

  const report: SelfTestReport = { ok: true, compared: 0, worst: 0, lines: [] };
  for (const c of cases()) {
    const view = viewMatrix(c.camera);
    const proj = perspective(Math.PI / 4, 1, 0.05, 100);
    const eye = eyeOf(c.camera);

    gl.viewport(0, 0, SIZE, SIZE);
    gl.enable(gl.DEPTH_TEST);
    // magenta sentinel: no tube fragment can produce it (caps have r=0,
    // non-caps have b=0), so background detection is unambiguous
    gl.clearColor(1, 0, 1, 1);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);

    drawBatch(gl, prog, c.batch, view, proj, eye);
    const pixels = new Uint8Array(SIZE * SIZE * 4);
    gl.readPixels(0, 0, SIZE, SIZE, gl.RGBA, gl.UNSIGNED_BYTE, pixels);

    const soft = rasterizeTubes([c.batch], view, proj, eye, SIZE, SIZE);

    let worst = 0;
    let compared = 0;
    for (let y = 1; y < SIZE - 1; y++) {
      for (let x = 1; x < SIZE - 1; x++) {
        if (!interior(soft.covered, pixels, x, y)) continue;
        const at = y * SIZE + x;
        // readPixels rows run bottom-up, matching the softrender's y axis
        const o = at * 4;
        if (pixels[o + 2] > 127 || soft.pos[at] === 0) continue; // cap fragments
        const gpu = (pixels[o] + pixels[o + 1] / 255) / 255;
        const diff = Math.abs(gpu - soft.pos[at]);
        compared += 1;
        if (diff > worst) worst = diff;
      }
    }
    report.compared += compared;
    report.worst = Math.max(report.worst, worst);
    const ok = compared > 500 && worst <= TOLERANCE;
    report.ok = report.ok && ok;
    report.lines.push(
      `${c.label}: ${compared} fragments, worst |gpu - cpu| = ${worst.toExponential(2)} ${ok ? "ok" : "FAIL"}`,
    );
  }
  return report;
}

function eyeOf(cam: OrbitCamera): Vec3 {
  const cp = Math.cos(cam.pitch);
  return [
    cam.target[0] + cam.distance * cp * Math.cos(cam.yaw),
    cam.target[1] + cam.distance * cp * Math.sin(cam.yaw),
    cam.target[2] + cam.distance * Math.sin(cam.pitch),
  ];
}

function background(pixels: Uint8Array, at: number): boolean {
  const o = at * 4;
  return pixels[o] === 255 && pixels[o + 1] === 0 && pixels[o + 2] === 255;
}

function interior(covered: Uint8Array, pixels: Uint8Array, x: number, y: number): boolean {
  for (let dy = -1; dy <= 1; dy++) {
    for (let dx = -1; dx <= 1; dx++) {
      const at = (y + dy) * SIZE + (x + dx);
      if (!covered[at]) return false;
      if (background(pixels, at)) return false;
    }
  }
  return true;
}

function drawBatch(
  gl: WebGLRenderingContext,
  prog: WebGLProgram,
  batch: TubeBatch,
  view: Float32Array,
  proj: Float32Array,
  eye: Vec3,
): void {
  const upload = (data: Float32Array, name: string, size: number) => {
    const loc = gl.getAttribLocation(prog, name);
    if (loc < 0) return;
    const buf = gl.createBuffer()!;
    gl.bindBuffer(gl.ARRAY_BUFFER, buf);
    gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
    gl.enableVertexAttribArray(loc);
    gl.vertexAttribPointer(loc, size, gl.FLOAT, false, 0, 0);
  };
  upload(batch.position, "aPosition", 3);
  upload(batch.normal, "aNormal", 3);
  upload(batch.color, "aColor", 3);
  upload(batch.center, "aCenter", 3);
  upload(batch.frameN, "aFrameN", 3);
  upload(batch.frameB, "aFrameB", 3);
  upload(batch.cap, "aCap", 1);
  gl.uniformMatrix4fv(gl.getUniformLocation(prog, "uView"), false, view);
  gl.uniformMatrix4fv(gl.getUniformLocation(prog, "uProj"), false, proj);
  gl.uniform3fv(gl.getUniformLocation(prog, "uCameraPos"), eye);
  gl.uniform1f(gl.getUniformLocation(prog, "uRadius"), batch.radius);
  gl.uniform1f(gl.getUniformLocation(prog, "uWidth"), batch.width);
  const ibo = gl.createBuffer()!;
  gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, ibo);
  gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, batch.index, gl.STATIC_DRAW);
  gl.drawElements(gl.TRIANGLES, batch.index.length, gl.UNSIGNED_SHORT, 0);
}
