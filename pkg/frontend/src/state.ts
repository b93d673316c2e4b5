/** Console state and its pure transitions. The DOM layer in main.ts only
 * dispatches these and redraws; everything here is plain data in, data out. */

import type {
  SceneDetail,
  SceneSummary,
  ScalerInfo,
  SimulationResult,
} from "./types.js";
import { clamp01, type FieldError } from "./validate.js";

export interface OverlayToggles {
  groundTruth: boolean;
  samples: boolean;
  collisions: boolean;
}

export interface ConsoleState {
  scenes: SceneSummary[];
  scene: SceneDetail | null;
  /** one scaled speed condition per agent, all in [0, 1] */
  conditions: number[];
  k: number;
  seed: number;
  result: SimulationResult | null;
  /** 0 = last observed frame, 1..pred_len walk the prediction horizon */
  frame: number;
  playing: boolean;
  overlays: OverlayToggles;
  banner: string | null;
  fieldError: FieldError | null;
}

export function initialState(): ConsoleState {
  return {
    scenes: [],
    scene: null,
    conditions: [],
    k: 1,
    seed: 0,
    result: null,
    frame: 0,
    playing: false,
    overlays: { groundTruth: true, samples: true, collisions: true },
    banner: null,
    fieldError: null,
  };
}

/** Scale a raw speed (meters per frame) the way the backend scaler does. */
export function applyScaler(raw: number, scaler: ScalerInfo): number {
  const span = scaler.max_speed - scaler.min_speed;
  if (span <= 0) return 0;
  return clamp01((raw - scaler.min_speed) / span);
}

/** Mean observed scaled speed per agent, so an untouched slider asks the
 * model for the speed the agent was already moving at. */
export function defaultConditions(scene: SceneDetail, scaler: ScalerInfo): number[] {
  return scene.tracks.map((track) => {
    let total = 0;
    let steps = 0;
    for (let i = 1; i < track.observed.length; i++) {
      const dx = track.observed[i][0] - track.observed[i - 1][0];
      const dy = track.observed[i][1] - track.observed[i - 1][1];
      total += applyScaler(Math.hypot(dx, dy), scaler);
      steps += 1;
    }
    return steps > 0 ? total / steps : 0;
  });
}

export function scenesLoaded(state: ConsoleState, scenes: SceneSummary[]): ConsoleState {
  return { ...state, scenes, banner: null };
}

export function sceneSelected(
  state: ConsoleState,
  scene: SceneDetail,
  scaler: ScalerInfo,
): ConsoleState {
  return {
    ...state,
    scene,
    conditions: defaultConditions(scene, scaler),
    result: null,
    frame: 0,
    playing: false,
    fieldError: null,
    banner: null,
  };
}

export function resultLoaded(state: ConsoleState, result: SimulationResult): ConsoleState {
  return { ...state, result, frame: 0, playing: false, fieldError: null, banner: null };
}

export function setGlobalCondition(state: ConsoleState, value: number): ConsoleState {
  const v = clamp01(value);
  return { ...state, conditions: state.conditions.map(() => v), fieldError: null };
}

export function setAgentCondition(
  state: ConsoleState,
  agentIndex: number,
  value: number,
): ConsoleState {
  const conditions = state.conditions.slice();
  if (agentIndex >= 0 && agentIndex < conditions.length) {
    conditions[agentIndex] = clamp01(value);
  }
  return { ...state, conditions, fieldError: null };
}

/** Highest playable frame index: pred_len once a result is loaded, else 0. */
export function maxFrame(state: ConsoleState): number {
  if (state.result === null) return 0;
  const first = state.result.samples[0];
  if (first === undefined || first.agents[0] === undefined) return 0;
  return first.agents[0].positions.length;
}

export function setFrame(state: ConsoleState, frame: number): ConsoleState {
  const clamped = Math.min(maxFrame(state), Math.max(0, Math.round(frame)));
  return { ...state, frame: clamped };
}

export function setBanner(state: ConsoleState, banner: string | null): ConsoleState {
  return { ...state, banner };
}

export function setFieldError(state: ConsoleState, err: FieldError | null): ConsoleState {
  return { ...state, fieldError: err };
}
