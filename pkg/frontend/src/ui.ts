/**
 * DOM layer: builds the console into a root element and re-renders it from
 * the view model on every change event. Elements carry data-role attributes
 * so tests can address them without relying on styling.
 */

import { Mode } from "./protocol.js";
import { renderSparkline } from "./sparkline.js";
import { ConsoleViewModel } from "./viewmodel.js";

const SLIDER_STEPS = 1000;

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  role: string | null,
  text = "",
  className = "",
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (role !== null) {
    node.setAttribute("data-role", role);
  }
  if (text) {
    node.textContent = text;
  }
  if (className) {
    node.className = className;
  }
  return node;
}

export interface ConsoleUI {
  render(): void;
  dispose(): void;
}

export function mountConsole(root: HTMLElement, vm: ConsoleViewModel): ConsoleUI {
  const doc = root.ownerDocument;
  root.classList.add("console");

  // header -----------------------------------------------------------------
  const header = el(doc, "div", null, "", "header");
  const status = el(doc, "span", "status", "disconnected", "status");
  const scenario = el(doc, "span", "scenario");
  const heartbeat = el(doc, "span", "heartbeat", "hb: --");
  const driverBtn = el(doc, "button", "request-driver", "take driver");
  driverBtn.addEventListener("click", () => vm.requestDriver());
  const driverState = el(doc, "span", "driver-state", "viewer");
  header.append(status, scenario, heartbeat, driverBtn, driverState);

  // mode + session controls --------------------------------------------------
  const modeRow = el(doc, "div", null, "", "row");
  const modeButtons = new Map<Mode, HTMLButtonElement>();
  for (const mode of ["track", "admittance", "insert"] as Mode[]) {
    const b = el(doc, "button", `mode-${mode}`, mode);
    b.addEventListener("click", () => vm.setMode(mode));
    modeButtons.set(mode, b);
    modeRow.append(b);
  }
  const pauseBtn = el(doc, "button", "pause", "pause");
  pauseBtn.addEventListener("click", () => vm.pause());
  const resumeBtn = el(doc, "button", "resume", "resume");
  resumeBtn.addEventListener("click", () => vm.resume());
  const resetBtn = el(doc, "button", "reset", "reset");
  resetBtn.addEventListener("click", () => vm.reset());
  const saveBtn = el(doc, "button", "save-log", "save log");
  saveBtn.addEventListener("click", () => vm.saveLog());
  modeRow.append(pauseBtn, resumeBtn, resetBtn, saveBtn);

  // readouts -----------------------------------------------------------------
  const readouts = el(doc, "div", null, "", "readouts");
  const force = el(doc, "div", "force", "F_t: --", "gauge");
  const forceBar = el(doc, "div", "force-bar", "", "bar");
  const smoothing = el(doc, "label", null, "", "smoothing");
  const smoothingBox = el(doc, "input", "smoothing-toggle");
  smoothingBox.type = "checkbox";
  smoothingBox.addEventListener("change", () => vm.toggleSmoothing());
  smoothing.append(smoothingBox, doc.createTextNode(" smooth (EMA)"));
  const forceSpark = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  forceSpark.setAttribute("data-role", "force-sparkline");
  const depth = el(doc, "div", "depth", "depth: --", "gauge");
  const depthSpark = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  depthSpark.setAttribute("data-role", "depth-sparkline");
  const taskErr = el(doc, "div", "task-err", "err: --", "gauge");
  readouts.append(force, forceBar, smoothing, forceSpark as unknown as HTMLElement,
    depth, depthSpark as unknown as HTMLElement, taskErr);

  // haptic slider ------------------------------------------------------------
  const hapticRow = el(doc, "div", null, "", "row haptic");
  const slider = el(doc, "input", "haptic-slider");
  slider.type = "range";
  slider.min = "0";
  slider.max = String(SLIDER_STEPS);
  slider.value = "0";
  slider.addEventListener("input", () => {
    vm.hapticSliderInput(Number(slider.value) / SLIDER_STEPS);
  });
  const hapticLabel = el(doc, "span", "haptic-label", "x_h: 0.0 mm");
  hapticRow.append(el(doc, "span", null, "insertion"), slider, hapticLabel);

  // wrench pad ----------------------------------------------------------------
  const pad = el(doc, "div", null, "", "row pad");
  const padForce = 2.5; // N per press
  for (const [label, axis, sign] of [
    ["+x", 0, 1], ["-x", 0, -1], ["+y", 1, 1], ["-y", 1, -1], ["+z", 2, 1], ["-z", 2, -1],
  ] as const) {
    const b = el(doc, "button", `wrench-${label}`, label, "pad-btn");
    b.addEventListener("pointerdown", () => vm.wrenchPadPress(axis, sign * padForce));
    b.addEventListener("pointerup", () => vm.wrenchPadRelease());
    b.addEventListener("pointerleave", () => vm.wrenchPadRelease());
    pad.append(b);
  }

  // jog ------------------------------------------------------------------------
  const jogRow = el(doc, "div", null, "", "row jog");
  const jogStep = 0.005; // m, inside the service's per-command limit
  for (const [label, axis, sign] of [
    ["x-", 0, -1], ["x+", 0, 1], ["y-", 1, -1], ["y+", 1, 1], ["z-", 2, -1], ["z+", 2, 1],
  ] as const) {
    const b = el(doc, "button", `jog-${label}`, label);
    b.addEventListener("click", () => vm.jog(axis, sign * jogStep));
    jogRow.append(b);
  }

  // notice + history -------------------------------------------------------------
  const notice = el(doc, "div", "notice", "", "notice");
  const history = el(doc, "ul", "history", "", "history");

  root.append(header, modeRow, readouts, hapticRow, pad, jogRow, notice, history);

  const controls: HTMLButtonElement[] = [
    pauseBtn, resumeBtn, resetBtn, saveBtn, ...modeButtons.values(),
    ...Array.from(pad.querySelectorAll("button")),
    ...Array.from(jogRow.querySelectorAll("button")),
  ];

  function render(): void {
    status.textContent = vm.connection;
    status.className = `status status-${vm.connection}`;
    scenario.textContent = vm.welcome ? vm.welcome.scenario : "";
    const age = vm.heartbeatAgeMs();
    heartbeat.textContent = age === null ? "hb: --" : `hb: ${(age / 1000).toFixed(1)}s ago`;
    driverState.textContent = vm.driverToken !== null ? "driver" : vm.driverPending ? "requesting" : "viewer";

    const enabled = vm.controlsEnabled;
    for (const b of controls) {
      b.disabled = !enabled;
    }
    slider.disabled = !enabled;
    driverBtn.disabled = !enabled || vm.driverToken !== null;

    const state = vm.latest;
    if (state !== null) {
      const f = vm.displayedForce();
      force.textContent = `F_t: ${f.toFixed(3)} N${vm.smoothingEnabled ? " (smoothed)" : ""}`;
      forceBar.style.width = `${Math.min(100, Math.abs(f) * 10).toFixed(0)}%`;
      depth.textContent =
        `depth: ${(state.depth * 1000).toFixed(2)} mm / target ${(state.x_h * 1000).toFixed(2)} mm`;
      const e = state.task_err;
      taskErr.textContent = `err: ${(Math.hypot(e[0], e[1], e[2]) * 1000).toFixed(2)} mm`;
      // slider tint scales with |F_t| as the kinesthetic substitute
      const tint = Math.min(1, Math.abs(state.F_t) / 10);
      slider.style.background = `rgba(220, 60, 60, ${tint.toFixed(2)})`;
      hapticLabel.textContent = `x_h: ${(state.x_h * 1000).toFixed(1)} mm`;
      for (const [mode, b] of modeButtons) {
        b.classList.toggle("active", mode === state.mode);
      }
    }
    renderSparkline(forceSpark, vm.forcePlot.toArray(), { width: 240, height: 40 });
    renderSparkline(depthSpark, vm.depthPlot.toArray(), { width: 240, height: 40 });
    notice.textContent = vm.notice ?? "";
    // newest first, trimmed render
    const items = vm.commandHistory.slice(-8).reverse();
    history.textContent = "";
    for (const item of items) {
      history.append(el(doc, "li", null, `[${item.status}] ${item.type}: ${item.detail}`));
    }
  }

  const unsubscribe = vm.onChange(render);
  render();
  return {
    render,
    dispose: unsubscribe,
  };
}
