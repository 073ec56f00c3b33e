/** Viewer bootstrap.
 *
 * Query parameters restore a shared view; ?ws=host:port points the
 * client at an extraction service (default: same host, port 7445) and
 * ?selftest=1 runs the GPU-vs-CPU silhouette comparison instead of the
 * viewer.  Without a service connection the viewer still works on
 * dropped or opened exchange files.
 */

import { clampPitch } from "./camera.js";
import { lodSlice, maxLevel, parseDocument } from "./exchange.js";
import { Renderer } from "./renderer.js";
import { runSelfTest } from "./selftest.js";
import { clampState, stateFromQuery, stateToQuery } from "./state.js";
import { REQUEST_DEBOUNCE_MS, ServiceClient, debounce } from "./socket.js";
import type { ExchangeDocument, ExtractionParams, Reply } from "./types.js";
import { buildUI, enableDrop } from "./ui.js";

function selftestPage(): void {
  const pre = document.createElement("pre");
  pre.style.padding = "1rem";
  document.body.appendChild(pre);
  const canvas = document.createElement("canvas");
  canvas.style.border = "1px solid #888";
  document.body.appendChild(canvas);
  const report = runSelfTest(canvas);
  pre.textContent = [
    report.ok ? "SELFTEST PASS" : "SELFTEST FAIL",
    `fragments compared: ${report.compared}`,
    `worst |gpu - cpu|: ${report.worst.toExponential(3)}`,
    ...report.lines,
  ].join("\n");
}

function viewerPage(): void {
  const query = new URLSearchParams(location.search);
  const state = stateFromQuery(query);

  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const panel = document.getElementById("panel") as HTMLElement;
  const renderer = new Renderer(canvas);

  let doc: ExchangeDocument | null = null;
  let docLevels = state.extraction.levels;

  const wsTarget = query.get("ws") ?? `${location.hostname || "localhost"}:7445`;
  const client = new ServiceClient(`ws://${wsTarget}/`, {
    onStatus: (status) => ui.setStatus(status),
    onReply: (reply: Reply) => {
      if (reply.status === "error") {
        ui.setNote(`${reply.code}: ${reply.message}`, true);
        return;
      }
      if (reply.op !== "extract" || reply.payload === undefined) return;
      try {
        applyDocument(parseDocument(reply.payload), "service");
      } catch (err) {
        ui.setNote(String(err), true);
      }
    },
    onProtocolError: (noteText) => ui.setNote(noteText, true),
  });

  const requestNow = (): void => {
    const ex = state.extraction;
    if (!ex.mesh) {
      ui.setNote("set a mesh name to request an extraction", false);
      return;
    }
    const params: ExtractionParams = {
      op: "extract",
      mesh: ex.mesh,
      eps: ex.eps,
      levels: ex.levels,
      types: ex.types,
      strategy: ex.strategy,
      scheme: ex.scheme,
      scalar: state.scalar,
    };
    ui.setNote("requesting...", false);
    client.request(params);
  };
  const requestSoon = debounce(requestNow, REQUEST_DEBOUNCE_MS);

  const applyDocument = (next: ExchangeDocument, origin: string): void => {
    doc = next;
    docLevels = Math.max(1, maxLevel(next));
    clampState(state, docLevels);
    ui.setMaxLevels(docLevels);
    ui.refresh();
    renderer.setDocument(doc);
    const nptsTotal = next.psls.reduce((n, p) => n + p.points.length, 0);
    const atLod = lodSlice(next, Math.max(...Object.values(state.lod))).length;
    ui.setNote(
      `${origin}: ${next.psls.length} lines (${atLod} at current LoD), ${nptsTotal} points, d0=${next.d0}`,
      false,
    );
  };

  const ui = buildUI(panel, state, {
    onViewChanged(sceneChanged) {
      clampState(state, docLevels);
      renderer.setState(state, sceneChanged);
    },
    onExtractionChanged() {
      clampState(state, docLevels);
      requestSoon();
    },
    onFileText(name, text) {
      try {
        applyDocument(parseDocument(text), name);
      } catch (err) {
        ui.setNote(String(err), true);
      }
    },
    onRetry() {
      client.retry();
      requestSoon.cancel();
      if (state.extraction.mesh) requestNow();
    },
    onShare() {
      const url = `${location.origin}${location.pathname}?${stateToQuery(state)}`;
      void navigator.clipboard?.writeText(url);
      ui.setNote("view URL copied", false);
    },
  });
  enableDrop(canvas, (name, text) => {
    try {
      applyDocument(parseDocument(text), name);
    } catch (err) {
      ui.setNote(String(err), true);
    }
  });

  // --- orbit controls -------------------------------------------------------
  let dragging = false;
  let panMode = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("pointerdown", (ev) => {
    dragging = true;
    panMode = ev.shiftKey || ev.button === 2;
    lastX = ev.clientX;
    lastY = ev.clientY;
    canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const dx = ev.clientX - lastX;
    const dy = ev.clientY - lastY;
    lastX = ev.clientX;
    lastY = ev.clientY;
    const cam = state.camera;
    if (panMode) {
      const k = cam.distance * 0.0015;
      const cy = Math.cos(cam.yaw);
      const sy = Math.sin(cam.yaw);
      // screen right is (-sin yaw, cos yaw, 0), screen up leans on z
      cam.target[0] += -dx * k * -sy + dy * k * cy * Math.sin(cam.pitch);
      cam.target[1] += -dx * k * cy + dy * k * sy * Math.sin(cam.pitch);
      cam.target[2] += dy * k * Math.cos(cam.pitch);
    } else {
      cam.yaw -= dx * 0.008;
      cam.pitch = clampPitch(cam.pitch + dy * 0.008);
    }
    renderer.setState(state, false);
  });
  canvas.addEventListener("pointerup", () => {
    dragging = false;
  });
  canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());
  canvas.addEventListener(
    "wheel",
    (ev) => {
      ev.preventDefault();
      state.camera.distance *= Math.exp(ev.deltaY * 0.001);
      clampState(state, docLevels);
      renderer.setState(state, false);
    },
    { passive: false },
  );

  window.addEventListener("resize", () => renderer.requestDraw());

  ui.setStatus("disconnected");
  client.connect();
  renderer.setState(state, true);
  if (state.extraction.mesh) requestNow();
  else ui.setNote("drop an exchange JSON file here, or set a mesh name", false);
}

if (new URLSearchParams(location.search).get("selftest") === "1") {
  selftestPage();
} else {
  viewerPage();
}
