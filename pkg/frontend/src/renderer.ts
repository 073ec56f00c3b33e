/** WebGL renderer.
 *
 * Owns GL objects and nothing else: the document and the view state
 * live outside, so losing the context costs us a recompile and a scene
 * rebuild but no state.  Scene geometry is rebuilt only when data or a
 * geometry-affecting control changes; camera motion just redraws.
 */

import { eyePosition, perspective, viewDepth, viewMatrix } from "./camera.js";
import type { Mat4 } from "./camera.js";
import { scalarRange, visiblePsls } from "./exchange.js";
import { buildHull, buildLineBatch, buildTubeBatches } from "./scene.js";
import type { ColorScale, TubeBatch } from "./scene.js";
import {
  HULL_FRAGMENT,
  HULL_VERTEX,
  LINE_FRAGMENT,
  LINE_VERTEX,
  TUBE_FRAGMENT,
  TUBE_VERTEX,
} from "./shaders.js";
import { OUTLINE_THRESHOLD } from "./silhouette.js";
import { RIBBON_SIDES, TUBE_SIDES } from "./tubes.js";
import type { ExchangeDocument } from "./types.js";
import type { ViewState } from "./state.js";
import type { Vec3 } from "./vec.js";

const TUBE_RADIUS_FACTOR = 0.12;
const HULL_COLOR: Vec3 = [0.55, 0.58, 0.62];
const HULL_OPACITY = 0.35;
const CLEAR_COLOR = [0.97, 0.97, 0.98, 1.0] as const;

type GL = WebGLRenderingContext;

interface Program {
  handle: WebGLProgram;
  attribs: Record<string, number>;
  uniforms: Record<string, WebGLUniformLocation | null>;
}

interface TubeDraw {
  buffers: Record<string, WebGLBuffer>;
  indexBuffer: WebGLBuffer;
  count: number;
  radius: number;
  width: number;
}

interface ArrayDraw {
  position: WebGLBuffer;
  extra: WebGLBuffer; // color for lines, normal for the hull
  count: number;
}

function compile(gl: GL, kind: number, src: string): WebGLShader {
  const sh = gl.createShader(kind)!;
  gl.shaderSource(sh, src);
  gl.compileShader(sh);
  if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(sh) ?? "?"}`);
  }
  return sh;
}

function link(gl: GL, vs: string, fs: string, attribs: string[], uniforms: string[]): Program {
  const prog = gl.createProgram()!;
  gl.attachShader(prog, compile(gl, gl.VERTEX_SHADER, vs));
  gl.attachShader(prog, compile(gl, gl.FRAGMENT_SHADER, fs));
  gl.linkProgram(prog);
  if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
    throw new Error(`program link failed: ${gl.getProgramInfoLog(prog) ?? "?"}`);
  }
  const out: Program = { handle: prog, attribs: {}, uniforms: {} };
  for (const name of attribs) out.attribs[name] = gl.getAttribLocation(prog, name);
  for (const name of uniforms) out.uniforms[name] = gl.getUniformLocation(prog, name);
  return out;
}

const TUBE_ATTRIBS = ["aPosition", "aNormal", "aColor", "aCenter", "aFrameN", "aFrameB", "aCap"];
const TUBE_UNIFORMS = [
  "uView", "uProj", "uCameraPos", "uRadius", "uWidth",
  "uOutline", "uDepthMin", "uDepthMax", "uCue",
];

export class Renderer {
  readonly canvas: HTMLCanvasElement;
  private gl: GL | null = null;
  private lost = false;
  private tubeProg!: Program;
  private lineProg!: Program;
  private hullProg!: Program;
  private tubeDraws: TubeDraw[] = [];
  private lineDraw: ArrayDraw | null = null;
  private hullDraw: ArrayDraw | null = null;
  private scenePoints: Float32Array = new Float32Array(0);
  private doc: ExchangeDocument | null = null;
  private state: ViewState | null = null;
  private sceneDirty = true;
  private frame = 0;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    canvas.addEventListener("webglcontextlost", (ev) => {
      ev.preventDefault();
      this.lost = true;
    });
    canvas.addEventListener("webglcontextrestored", () => {
      this.lost = false;
      this.initGL();
      this.sceneDirty = true;
      this.requestDraw();
    });
    this.initGL();
  }

  private initGL(): void {
    const gl = this.canvas.getContext("webgl", { antialias: true, alpha: false });
    if (!gl) throw new Error("WebGL is not available");
    this.gl = gl;
    this.tubeProg = link(gl, TUBE_VERTEX, TUBE_FRAGMENT, TUBE_ATTRIBS, TUBE_UNIFORMS);
    this.lineProg = link(
      gl, LINE_VERTEX, LINE_FRAGMENT,
      ["aPosition", "aColor"],
      ["uView", "uProj", "uDepthMin", "uDepthMax", "uCue"],
    );
    this.hullProg = link(
      gl, HULL_VERTEX, HULL_FRAGMENT,
      ["aPosition", "aNormal"],
      ["uView", "uProj", "uCameraPos", "uHullColor", "uHullOpacity"],
    );
    this.tubeDraws = [];
    this.lineDraw = null;
    this.hullDraw = null;
  }

  setDocument(doc: ExchangeDocument | null): void {
    this.doc = doc;
    this.sceneDirty = true;
    this.requestDraw();
  }

  /** sceneChanged: geometry or colors moved, not just the camera. */
  setState(state: ViewState, sceneChanged: boolean): void {
    this.state = state;
    if (sceneChanged) this.sceneDirty = true;
    this.requestDraw();
  }

  requestDraw(): void {
    if (this.frame) return;
    this.frame = requestAnimationFrame(() => {
      this.frame = 0;
      this.draw();
    });
  }

  private upload(data: Float32Array): WebGLBuffer {
    const gl = this.gl!;
    const buf = gl.createBuffer()!;
    gl.bindBuffer(gl.ARRAY_BUFFER, buf);
    gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
    return buf;
  }

  private buildScene(): void {
    const gl = this.gl!;
    for (const d of this.tubeDraws) {
      for (const b of Object.values(d.buffers)) gl.deleteBuffer(b);
      gl.deleteBuffer(d.indexBuffer);
    }
    this.tubeDraws = [];
    this.lineDraw = null;
    this.hullDraw = null;
    this.scenePoints = new Float32Array(0);
    if (!this.doc || !this.state) return;

    const s = this.state;
    const visible = visiblePsls(this.doc, s.lod, s.enabled);
    const scale: ColorScale = { transfer: s.transfer, ...scalarRange(visible) };
    const radius = TUBE_RADIUS_FACTOR * this.doc.d0;
    const sides = s.width >= 0.999 ? TUBE_SIDES : RIBBON_SIDES;

    const linePsls = [];
    const pts: number[] = [];
    for (const psl of visible) {
      for (const p of psl.points) pts.push(p[0], p[1], p[2]);
      if (s.ribbon[psl.type] && psl.frames && psl.points.length > 1) {
        for (const batch of buildTubeBatches(psl, radius, s.width, sides, scale)) {
          this.tubeDraws.push(this.uploadTubeBatch(batch));
        }
      } else {
        linePsls.push(psl);
      }
    }
    this.scenePoints = Float32Array.from(pts);

    if (linePsls.length) {
      const lines = buildLineBatch(linePsls, scale);
      if (lines.position.length) {
        this.lineDraw = {
          position: this.upload(lines.position),
          extra: this.upload(lines.color),
          count: lines.position.length / 3,
        };
      }
    }

    const [lo, hi] = this.doc.bbox;
    const hull = buildHull([lo[0], lo[1], lo[2]], [hi[0], hi[1], hi[2]]);
    this.hullDraw = {
      position: this.upload(hull.position),
      extra: this.upload(hull.normal),
      count: hull.position.length / 3,
    };
  }

  private uploadTubeBatch(batch: TubeBatch): TubeDraw {
    const gl = this.gl!;
    const indexBuffer = gl.createBuffer()!;
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, indexBuffer);
    gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, batch.index, gl.STATIC_DRAW);
    return {
      buffers: {
        aPosition: this.upload(batch.position),
        aNormal: this.upload(batch.normal),
        aColor: this.upload(batch.color),
        aCenter: this.upload(batch.center),
        aFrameN: this.upload(batch.frameN),
        aFrameB: this.upload(batch.frameB),
        aCap: this.upload(batch.cap),
      },
      indexBuffer,
      count: batch.index.length,
      radius: batch.radius,
      width: batch.width,
    };
  }

  /** Min and max view-space depth over every visible polyline point. */
  private depthRange(view: Mat4): [number, number] {
    let lo = Infinity;
    let hi = -Infinity;
    const pts = this.scenePoints;
    for (let i = 0; i < pts.length; i += 3) {
      const d = viewDepth(view, [pts[i], pts[i + 1], pts[i + 2]]);
      if (d < lo) lo = d;
      if (d > hi) hi = d;
    }
    if (lo > hi) return [0, 1];
    if (lo === hi) return [lo, lo + 1];
    return [lo, hi];
  }

  draw(): void {
    const gl = this.gl;
    if (!gl || this.lost || !this.state) return;

    const dpr = window.devicePixelRatio || 1;
    const w = Math.max(1, Math.round(this.canvas.clientWidth * dpr));
    const h = Math.max(1, Math.round(this.canvas.clientHeight * dpr));
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.canvas.width = w;
      this.canvas.height = h;
    }
    gl.viewport(0, 0, w, h);
    gl.clearColor(...CLEAR_COLOR);
    gl.enable(gl.DEPTH_TEST);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);

    if (this.sceneDirty) {
      this.buildScene();
      this.sceneDirty = false;
    }
    if (!this.doc) return;

    const s = this.state;
    const cam = s.camera;
    const view = viewMatrix(cam);
    const eye = eyePosition(cam);
    const near = Math.max(cam.distance * 1e-3, 1e-4);
    const proj = perspective(Math.PI / 4, w / h, near, cam.distance * 40);
    const [dMin, dMax] = this.depthRange(view);

    if (this.tubeDraws.length) {
      const p = this.tubeProg;
      gl.useProgram(p.handle);
      gl.uniformMatrix4fv(p.uniforms.uView, false, view);
      gl.uniformMatrix4fv(p.uniforms.uProj, false, proj);
      gl.uniform3fv(p.uniforms.uCameraPos, eye);
      gl.uniform1f(p.uniforms.uOutline, OUTLINE_THRESHOLD);
      gl.uniform1f(p.uniforms.uDepthMin, dMin);
      gl.uniform1f(p.uniforms.uDepthMax, dMax);
      gl.uniform1f(p.uniforms.uCue, s.depthCue);
      for (const draw of this.tubeDraws) {
        gl.uniform1f(p.uniforms.uRadius, draw.radius);
        gl.uniform1f(p.uniforms.uWidth, draw.width);
        for (const [name, loc] of Object.entries(p.attribs)) {
          if (loc < 0) continue;
          gl.bindBuffer(gl.ARRAY_BUFFER, draw.buffers[name]);
          gl.enableVertexAttribArray(loc);
          gl.vertexAttribPointer(loc, name === "aCap" ? 1 : 3, gl.FLOAT, false, 0, 0);
        }
        gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, draw.indexBuffer);
        gl.drawElements(gl.TRIANGLES, draw.count, gl.UNSIGNED_SHORT, 0);
      }
    }

    if (this.lineDraw) {
      const p = this.lineProg;
      gl.useProgram(p.handle);
      gl.uniformMatrix4fv(p.uniforms.uView, false, view);
      gl.uniformMatrix4fv(p.uniforms.uProj, false, proj);
      gl.uniform1f(p.uniforms.uDepthMin, dMin);
      gl.uniform1f(p.uniforms.uDepthMax, dMax);
      gl.uniform1f(p.uniforms.uCue, s.depthCue);
      gl.bindBuffer(gl.ARRAY_BUFFER, this.lineDraw.position);
      gl.enableVertexAttribArray(p.attribs.aPosition);
      gl.vertexAttribPointer(p.attribs.aPosition, 3, gl.FLOAT, false, 0, 0);
      gl.bindBuffer(gl.ARRAY_BUFFER, this.lineDraw.extra);
      gl.enableVertexAttribArray(p.attribs.aColor);
      gl.vertexAttribPointer(p.attribs.aColor, 3, gl.FLOAT, false, 0, 0);
      gl.drawArrays(gl.LINES, 0, this.lineDraw.count);
    }

    if (this.hullDraw && s.showHull) {
      const p = this.hullProg;
      gl.useProgram(p.handle);
      gl.enable(gl.BLEND);
      gl.blendFunc(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA);
      gl.depthMask(false);
      gl.uniformMatrix4fv(p.uniforms.uView, false, view);
      gl.uniformMatrix4fv(p.uniforms.uProj, false, proj);
      gl.uniform3fv(p.uniforms.uCameraPos, eye);
      gl.uniform3fv(p.uniforms.uHullColor, HULL_COLOR);
      gl.uniform1f(p.uniforms.uHullOpacity, HULL_OPACITY);
      gl.bindBuffer(gl.ARRAY_BUFFER, this.hullDraw.position);
      gl.enableVertexAttribArray(p.attribs.aPosition);
      gl.vertexAttribPointer(p.attribs.aPosition, 3, gl.FLOAT, false, 0, 0);
      gl.bindBuffer(gl.ARRAY_BUFFER, this.hullDraw.extra);
      gl.enableVertexAttribArray(p.attribs.aNormal);
      gl.vertexAttribPointer(p.attribs.aNormal, 3, gl.FLOAT, false, 0, 0);
      gl.drawArrays(gl.TRIANGLES, 0, this.hullDraw.count);
      gl.depthMask(true);
      gl.disable(gl.BLEND);
    }
  }
}
