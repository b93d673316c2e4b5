/** DOM wiring: listens to controls, dispatches state transitions, redraws.
 * All numbers shown on screen are served by the API. */

import { ApiClient, ApiError, isAbort } from "./api.js";
import { Playback } from "./playback.js";
import { drawScene } from "./render.js";
import {
  initialState,
  maxFrame,
  resultLoaded,
  sceneSelected,
  scenesLoaded,
  setAgentCondition,
  setBanner,
  setFieldError,
  setFrame,
  setGlobalCondition,
  type ConsoleState,
} from "./state.js";
import type { ModelInfo, SceneSummary } from "./types.js";
import { speedReadoutAtFrame } from "./overlay.js";
import { firstError } from "./validate.js";

const api = new ApiClient("");
let state: ConsoleState = initialState();
let info: ModelInfo | null = null;
let playback: Playback | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d")!;

function viewport() {
  return { width: canvas.width, height: canvas.height, margin: 24 };
}

function redraw(): void {
  drawScene(ctx, state, viewport());
  syncPlaybackUi();
}

// ------------------------------------------------------------- banner

function showBanner(message: string | null): void {
  state = setBanner(state, message);
  const banner = el<HTMLDivElement>("banner");
  banner.classList.toggle("hidden", message === null);
  el<HTMLSpanElement>("banner-text").textContent = message ?? "";
}

// ------------------------------------------------------------- boot

async function boot(): Promise<void> {
  showBanner(null);
  try {
    info = await api.modelInfo();
    const scenes = await api.listScenes();
    state = scenesLoaded(state, scenes);
    el<HTMLSpanElement>("status").textContent =
      `checkpoint ${info.checkpoint_id} · step ${info.step} · ${info.n_scenes} scenes`;
    renderSceneList(scenes);
  } catch (err) {
    showBanner(`service unreachable: ${err instanceof Error ? err.message : String(err)}`);
  }
}

function renderSceneList(scenes: SceneSummary[]): void {
  const list = el<HTMLUListElement>("scene-list");
  list.textContent = "";
  if (scenes.length === 0) {
    const empty = document.createElement("li");
    empty.className = "placeholder";
    empty.textContent = "no scenes";
    list.appendChild(empty);
    return;
  }
  for (const s of scenes) {
    const item = document.createElement("li");
    const btn = document.createElement("button");
    btn.textContent = `scene ${s.scene_id}`;
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = `${s.n_agents} agents · ${s.speed_fold}`;
    btn.appendChild(badge);
    btn.addEventListener("click", () => void selectScene(s.scene_id));
    item.appendChild(btn);
    list.appendChild(item);
  }
}

async function selectScene(id: number): Promise<void> {
  if (info === null) return;
  try {
    const detail = await api.getScene(id);
    state = sceneSelected(state, detail, info.scaler);
    playback = new Playback(frameIntervalMs());
    renderConditionSliders();
    renderMetrics();
    updateFrameSlider();
    el<HTMLDivElement>("scene-caption").textContent =
      `scene ${detail.scene_id} · ${detail.n_agents} agents · fold ${detail.speed_fold}`;
    redraw();
  } catch (err) {
    showBanner(`could not load scene ${id}: ${err instanceof Error ? err.message : String(err)}`);
  }
}

function frameIntervalMs(): number {
  return (state.result?.metadata.frame_interval ?? 0.4) * 1000;
}

// ------------------------------------------------------------- controls

function renderConditionSliders(): void {
  const box = el<HTMLDivElement>("agent-sliders");
  box.textContent = "";
  state.conditions.forEach((value, i) => {
    const row = document.createElement("label");
    row.className = "slider-row";
    const track = state.scene!.tracks[i];
    const name = document.createElement("span");
    name.textContent = `agent ${track.agent_id} (${track.agent_type})`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.01";
    slider.value = value.toFixed(2);
    const out = document.createElement("span");
    out.className = "value";
    out.textContent = value.toFixed(2);
    slider.addEventListener("input", () => {
      state = setAgentCondition(state, i, Number(slider.value));
      out.textContent = Number(slider.value).toFixed(2);
      clearFieldError();
    });
    row.append(name, slider, out);
    box.appendChild(row);
  });
}

function syncSlidersFromState(): void {
  const sliders = el<HTMLDivElement>("agent-sliders").querySelectorAll("input");
  sliders.forEach((slider, i) => {
    slider.value = (state.conditions[i] ?? 0).toFixed(2);
    const out = slider.parentElement?.querySelector(".value");
    if (out) out.textContent = (state.conditions[i] ?? 0).toFixed(2);
  });
}

function clearFieldError(): void {
  state = setFieldError(state, null);
  el<HTMLDivElement>("field-error").textContent = "";
  document
    .querySelectorAll(".invalid")
    .forEach((node) => node.classList.remove("invalid"));
}

function markFieldError(field: string, message: string): void {
  state = setFieldError(state, { field, message });
  el<HTMLDivElement>("field-error").textContent = `${field}: ${message}`;
  const target = document.querySelector(`[data-field="${field}"]`);
  target?.classList.add("invalid");
}

async function runSimulation(): Promise<void> {
  const scene = state.scene;
  if (scene === null) return;
  clearFieldError();
  const k = Number(el<HTMLInputElement>("k-input").value);
  const seed = Number(el<HTMLInputElement>("seed-input").value);
  const bad = firstError(state.conditions, k, seed);
  if (bad !== null) {
    markFieldError(bad.field, bad.message);
    return;
  }
  state = { ...state, k, seed };
  try {
    const result = await api.simulate({
      scene_id: scene.scene_id,
      condition: state.conditions,
      k,
      seed,
    });
    state = resultLoaded(state, result);
    playback = new Playback(frameIntervalMs());
    renderMetrics();
    updateFrameSlider();
    redraw();
  } catch (err) {
    if (isAbort(err)) return; // superseded by a newer request
    if (err instanceof ApiError && err.status === 422 && err.field !== undefined) {
      markFieldError(err.field, err.message);
      return;
    }
    showBanner(`simulation failed: ${err instanceof Error ? err.message : String(err)}`);
  }
}

function renderMetrics(): void {
  const box = el<HTMLDivElement>("metrics");
  box.textContent = "";
  const result = state.result;
  if (result === null) return;
  for (const sample of result.samples) {
    const line = document.createElement("div");
    const parts = sample.agents.map((a) =>
      a.ade !== undefined && a.fde !== undefined
        ? `agent ${a.agent_id}: ade ${a.ade.toFixed(3)} fde ${a.fde.toFixed(3)}`
        : `agent ${a.agent_id}: no ground truth`,
    );
    line.textContent = `sample ${sample.k} · ${parts.join(" · ")}`;
    box.appendChild(line);
  }
  const meta = document.createElement("div");
  meta.className = "meta";
  meta.textContent =
    `seed ${result.metadata.seed} · k ${result.metadata.k} · ` +
    `${result.metadata.elapsed_ms.toFixed(0)} ms`;
  box.appendChild(meta);
}

// ------------------------------------------------------------- playback

function updateFrameSlider(): void {
  const slider = el<HTMLInputElement>("frame-slider");
  slider.max = String(maxFrame(state));
  slider.value = String(state.frame);
  syncPlaybackUi();
}

function syncPlaybackUi(): void {
  el<HTMLInputElement>("frame-slider").value = String(state.frame);
  el<HTMLSpanElement>("frame-label").textContent =
    state.frame === 0 ? "frame 0 (last observed)" : `frame ${state.frame}`;
  const readoutBox = el<HTMLSpanElement>("speed-readout");
  if (state.result !== null && info !== null) {
    const readout = speedReadoutAtFrame(state.result, 0, state.frame, info.scaler);
    readoutBox.textContent =
      readout === null
        ? "speed –"
        : `speed ${readout.scaled.toFixed(2)} scaled · ${readout.metersPerSecond.toFixed(2)} m/s`;
  } else {
    readoutBox.textContent = "";
  }
  el<HTMLButtonElement>("play-btn").textContent =
    playback !== null && playback.playing ? "pause" : "play";
}

let lastTick: number | null = null;

function tick(now: number): void {
  if (playback !== null && playback.playing) {
    const dt = lastTick === null ? 0 : now - lastTick;
    if (playback.advance(dt, maxFrame(state))) {
      state = setFrame(state, playback.frame);
      redraw();
    } else {
      syncPlaybackUi();
    }
  }
  lastTick = now;
  requestAnimationFrame(tick);
}

// ------------------------------------------------------------- wiring

el<HTMLButtonElement>("retry-btn").addEventListener("click", () => void boot());
el<HTMLButtonElement>("simulate-btn").addEventListener("click", () => void runSimulation());

el<HTMLInputElement>("global-slider").addEventListener("input", () => {
  const slider = el<HTMLInputElement>("global-slider");
  state = setGlobalCondition(state, Number(slider.value));
  el<HTMLSpanElement>("global-value").textContent = Number(slider.value).toFixed(2);
  syncSlidersFromState();
  clearFieldError();
});

el<HTMLInputElement>("frame-slider").addEventListener("input", () => {
  const slider = el<HTMLInputElement>("frame-slider");
  playback?.pause();
  playback?.seek(Number(slider.value), maxFrame(state));
  state = setFrame(state, Number(slider.value));
  redraw();
});

el<HTMLButtonElement>("play-btn").addEventListener("click", () => {
  if (playback === null || state.result === null) return;
  if (playback.playing) {
    playback.pause();
  } else {
    playback.seek(state.frame, maxFrame(state));
    playback.play(maxFrame(state));
    state = setFrame(state, playback.frame);
  }
  redraw();
});

for (const [id, key] of [
  ["toggle-gt", "groundTruth"],
  ["toggle-samples", "samples"],
  ["toggle-collisions", "collisions"],
] as const) {
  el<HTMLInputElement>(id).addEventListener("change", () => {
    state = {
      ...state,
      overlays: { ...state.overlays, [key]: el<HTMLInputElement>(id).checked },
    };
    redraw();
  });
}

requestAnimationFrame(tick);
void boot();
