/** Control panel, status banner and file handling.
 *
 * Controls split into two groups.  View controls (camera, LoD sliders,
 * ribbon toggles, width, colors) only touch local state and re-render;
 * extraction controls (mesh, eps, level count, types, strategy,
 * scheme) change what the service has to compute and go through a
 * debounced request path owned by the caller.
 */

import type { PslType } from "./types.js";
import { PSL_TYPES } from "./types.js";
import { TRANSFER_NAMES } from "./colors.js";
import type { TransferName } from "./colors.js";
import type { ViewState } from "./state.js";
import type { ConnectionStatus } from "./socket.js";

const STRATEGIES = ["volume", "boundary", "loaded"];
const SCHEMES = ["euler", "rk2", "rk4"];
const SCALARS = ["von_mises", "sigma1", "sigma2", "sigma3", "sxx", "syy", "szz", "txy", "tyz", "txz"];

export interface UICallbacks {
  /** A view-only control changed; sceneChanged says geometry/colors moved. */
  onViewChanged(sceneChanged: boolean): void;
  /** An extraction parameter changed; caller debounces and requests. */
  onExtractionChanged(): void;
  onFileText(name: string, text: string): void;
  onRetry(): void;
  onShare(): void;
}

export interface UIHandles {
  setStatus(status: ConnectionStatus): void;
  setNote(text: string, isError?: boolean): void;
  setMaxLevels(levels: number): void;
  /** Re-read every control from the state (after URL load or clamping). */
  refresh(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function row(label: string, ...controls: HTMLElement[]): HTMLElement {
  const div = el("div", { class: "row" });
  div.appendChild(el("label", {}, label));
  for (const c of controls) div.appendChild(c);
  return div;
}

export function buildUI(panel: HTMLElement, state: ViewState, cb: UICallbacks): UIHandles {
  const refreshers: (() => void)[] = [];
  const track = (fn: () => void) => {
    refreshers.push(fn);
    fn();
  };

  // --- connection banner -------------------------------------------------
  const banner = el("div", { class: "banner hidden" });
  const bannerText = el("span", {}, "service unreachable");
  const retryBtn = el("button", {}, "retry");
  retryBtn.addEventListener("click", () => cb.onRetry());
  banner.append(bannerText, retryBtn);
  panel.appendChild(banner);

  const note = el("div", { class: "note" });
  panel.appendChild(note);

  // --- extraction --------------------------------------------------------
  const exBox = el("fieldset");
  exBox.appendChild(el("legend", {}, "extraction"));

  const meshInput = el("input", { type: "text", placeholder: "mesh name or path" });
  meshInput.addEventListener("change", () => {
    state.extraction.mesh = meshInput.value.trim();
    cb.onExtractionChanged();
  });
  track(() => (meshInput.value = state.extraction.mesh));
  exBox.appendChild(row("mesh", meshInput));

  const epsInput = el("input", { type: "number", step: "0.05", min: "0.01" });
  epsInput.addEventListener("input", () => {
    const v = Number(epsInput.value);
    if (Number.isFinite(v) && v > 0) {
      state.extraction.eps = v;
      cb.onExtractionChanged();
    }
  });
  track(() => (epsInput.value = String(state.extraction.eps)));
  exBox.appendChild(row("eps / d0", epsInput));

  const levelsInput = el("input", { type: "number", step: "1", min: "1", max: "8" });
  levelsInput.addEventListener("change", () => {
    const v = Math.round(Number(levelsInput.value));
    if (Number.isFinite(v) && v >= 1) {
      state.extraction.levels = v;
      cb.onExtractionChanged();
    }
  });
  track(() => (levelsInput.value = String(state.extraction.levels)));
  exBox.appendChild(row("levels", levelsInput));

  const typeBoxes: Record<PslType, HTMLInputElement> = {} as never;
  const typeRow = el("div", { class: "row" });
  typeRow.appendChild(el("label", {}, "types"));
  for (const t of PSL_TYPES) {
    const box = el("input", { type: "checkbox" });
    box.addEventListener("change", () => {
      const types = PSL_TYPES.filter((u) => typeBoxes[u].checked);
      if (types.length === 0) {
        box.checked = true; // the service rejects an empty list
        return;
      }
      state.extraction.types = types;
      cb.onExtractionChanged();
    });
    typeBoxes[t] = box;
    const wrap = el("span", { class: "check" });
    wrap.append(box, el("span", {}, t));
    typeRow.appendChild(wrap);
  }
  track(() => {
    for (const t of PSL_TYPES) typeBoxes[t].checked = state.extraction.types.includes(t);
  });
  exBox.appendChild(typeRow);

  const strategySel = el("select");
  for (const s of STRATEGIES) strategySel.appendChild(el("option", { value: s }, s));
  strategySel.addEventListener("change", () => {
    state.extraction.strategy = strategySel.value;
    cb.onExtractionChanged();
  });
  track(() => (strategySel.value = state.extraction.strategy));
  exBox.appendChild(row("strategy", strategySel));

  const schemeSel = el("select");
  for (const s of SCHEMES) schemeSel.appendChild(el("option", { value: s }, s));
  schemeSel.addEventListener("change", () => {
    state.extraction.scheme = schemeSel.value;
    cb.onExtractionChanged();
  });
  track(() => (schemeSel.value = state.extraction.scheme));
  exBox.appendChild(row("scheme", schemeSel));

  panel.appendChild(exBox);

  // --- level of detail (local, never hits the network) --------------------
  const lodBox = el("fieldset");
  lodBox.appendChild(el("legend", {}, "level of detail"));
  const lodSliders: Record<PslType, HTMLInputElement> = {} as never;
  for (const t of PSL_TYPES) {
    const slider = el("input", { type: "range", min: "1", max: String(state.extraction.levels), step: "1" });
    slider.addEventListener("input", () => {
      state.lod[t] = Number(slider.value);
      cb.onViewChanged(true);
    });
    lodSliders[t] = slider;
    lodBox.appendChild(row(t, slider));
  }
  track(() => {
    for (const t of PSL_TYPES) lodSliders[t].value = String(state.lod[t]);
  });
  panel.appendChild(lodBox);

  // --- appearance ----------------------------------------------------------
  const viewBox = el("fieldset");
  viewBox.appendChild(el("legend", {}, "appearance"));

  const showBoxes: Record<PslType, HTMLInputElement> = {} as never;
  const ribbonBoxes: Record<PslType, HTMLInputElement> = {} as never;
  for (const t of PSL_TYPES) {
    const show = el("input", { type: "checkbox" });
    show.addEventListener("change", () => {
      state.enabled[t] = show.checked;
      cb.onViewChanged(true);
    });
    showBoxes[t] = show;
    const ribbon = el("input", { type: "checkbox" });
    ribbon.addEventListener("change", () => {
      state.ribbon[t] = ribbon.checked;
      cb.onViewChanged(true);
    });
    ribbonBoxes[t] = ribbon;
    const wrapS = el("span", { class: "check" });
    wrapS.append(show, el("span", {}, "show"));
    const wrapR = el("span", { class: "check" });
    wrapR.append(ribbon, el("span", {}, "ribbon"));
    viewBox.appendChild(row(t, wrapS, wrapR));
  }
  track(() => {
    for (const t of PSL_TYPES) {
      showBoxes[t].checked = state.enabled[t];
      ribbonBoxes[t].checked = state.ribbon[t];
    }
  });

  const focusSel = el("select");
  const contextSel = el("select");
  for (const t of PSL_TYPES) {
    focusSel.appendChild(el("option", { value: t }, t));
    contextSel.appendChild(el("option", { value: t }, t));
  }
  // focus type gets dense plain lines, context gets sparse ribbons
  const applyFocusContext = () => {
    state.focus = focusSel.value as PslType;
    state.context = contextSel.value as PslType;
    state.ribbon[state.focus] = false;
    state.ribbon[state.context] = true;
    state.lod[state.focus] = state.extraction.levels;
    state.lod[state.context] = 1;
    for (const fn of refreshers) fn();
    cb.onViewChanged(true);
  };
  focusSel.addEventListener("change", applyFocusContext);
  contextSel.addEventListener("change", applyFocusContext);
  track(() => {
    focusSel.value = state.focus;
    contextSel.value = state.context;
  });
  viewBox.appendChild(row("focus", focusSel));
  viewBox.appendChild(row("context", contextSel));

  const scalarSel = el("select");
  for (const s of SCALARS) scalarSel.appendChild(el("option", { value: s }, s));
  scalarSel.addEventListener("change", () => {
    state.scalar = scalarSel.value;
    cb.onExtractionChanged(); // the scalar column is baked server side
  });
  track(() => {
    scalarSel.value = SCALARS.includes(state.scalar) ? state.scalar : "von_mises";
  });
  viewBox.appendChild(row("scalar", scalarSel));

  const tfSel = el("select");
  for (const s of TRANSFER_NAMES) tfSel.appendChild(el("option", { value: s }, s));
  tfSel.addEventListener("change", () => {
    state.transfer = tfSel.value as TransferName;
    cb.onViewChanged(true);
  });
  track(() => (tfSel.value = state.transfer));
  viewBox.appendChild(row("colors", tfSel));

  const widthSlider = el("input", { type: "range", min: "0.05", max: "1", step: "0.01" });
  widthSlider.addEventListener("input", () => {
    state.width = Number(widthSlider.value);
    cb.onViewChanged(true);
  });
  track(() => (widthSlider.value = String(state.width)));
  viewBox.appendChild(row("section width", widthSlider));

  const cueSlider = el("input", { type: "range", min: "0", max: "1", step: "0.01" });
  cueSlider.addEventListener("input", () => {
    state.depthCue = Number(cueSlider.value);
    cb.onViewChanged(false);
  });
  track(() => (cueSlider.value = String(state.depthCue)));
  viewBox.appendChild(row("depth cue", cueSlider));

  const hullBox = el("input", { type: "checkbox" });
  hullBox.addEventListener("change", () => {
    state.showHull = hullBox.checked;
    cb.onViewChanged(false);
  });
  track(() => (hullBox.checked = state.showHull));
  const hullWrap = el("span", { class: "check" });
  hullWrap.append(hullBox, el("span", {}, "visible"));
  viewBox.appendChild(row("hull", hullWrap));

  panel.appendChild(viewBox);

  // --- files and sharing ---------------------------------------------------
  const fileBox = el("fieldset");
  fileBox.appendChild(el("legend", {}, "document"));
  const fileInput = el("input", { type: "file", accept: ".json,application/json" });
  fileInput.addEventListener("change", () => {
    const f = fileInput.files?.[0];
    if (f) {
      void f.text().then((text) => cb.onFileText(f.name, text));
    }
  });
  fileBox.appendChild(row("open", fileInput));
  const shareBtn = el("button", {}, "copy view URL");
  shareBtn.addEventListener("click", () => cb.onShare());
  fileBox.appendChild(row("share", shareBtn));
  panel.appendChild(fileBox);

  return {
    setStatus(status) {
      banner.classList.toggle("hidden", status === "connected");
      bannerText.textContent =
        status === "connecting" ? "connecting to service..." : "service unreachable";
      retryBtn.style.display = status === "disconnected" ? "" : "none";
    },
    setNote(text, isError = false) {
      note.textContent = text;
      note.classList.toggle("error", isError);
    },
    setMaxLevels(levels) {
      for (const t of PSL_TYPES) {
        lodSliders[t].max = String(levels);
        if (state.lod[t] > levels) state.lod[t] = levels;
        lodSliders[t].value = String(state.lod[t]);
      }
    },
    refresh() {
      for (const fn of refreshers) fn();
    },
  };
}

/** Wire drag-and-drop of exchange JSON onto an element. */
export function enableDrop(target: HTMLElement, onText: (name: string, text: string) => void): void {
  target.addEventListener("dragover", (ev) => {
    ev.preventDefault();
    if (ev.dataTransfer) ev.dataTransfer.dropEffect = "copy";
  });
  target.addEventListener("drop", (ev) => {
    ev.preventDefault();
    const f = ev.dataTransfer?.files?.[0];
    if (f) {
      void f.text().then((text) => onText(f.name, text));
    }
  });
}
