/** End-to-end check against a real service: trains a small model with the
 * backend CLI, serves it, then drives the console's own modules through the
 * select scene / move slider / re-simulate loop. Skipped when the backend
 * CLI is not installed so the frontend tests stand alone. */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { performance } from "node:perf_hooks";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { agentPositionAtFrame } from "../src/overlay.js";
import {
  applyScaler,
  initialState,
  resultLoaded,
  sceneSelected,
  scenesLoaded,
  setGlobalCondition,
  type ConsoleState,
} from "../src/state.js";
import type { ModelInfo, SimulationResult } from "../src/types.js";
import { firstError } from "../src/validate.js";

const hasBackend = spawnSync("csg", ["--help"], { stdio: "ignore" }).status === 0;
const PORT = 8100 + (process.pid % 500);

const CONFIG = `\
data:
  synthetic:
    regimes:
      slow: {speed: 0.3, jitter_sd: 0.12, n_agents: 2}
      fast: {speed: 1.2, jitter_sd: 0.12, n_agents: 2}
    scenes_per_regime: 60
    obs_len: 8
    pred_len: 12
    seed: 11
model:
  embedding_dim: 16
  encoder_hidden: 32
  decoder_hidden: 32
  forecaster_hidden: 32
  noise_dim: 4
  aggregation: concat
  aggregation_dim: 16
  neighbor_count: 1
  social_dim: 8
  mlp_hidden: 32
  disc_embedding_dim: 16
  disc_hidden: 32
  disc_mlp_hidden: 16
  obs_len: 8
  pred_len: 12
  precision: float32
train:
  epochs: 30
  batch_size: 16
  seed: 5
  val_fraction: 0.1
  lambda_l2: 3.0
out: run
`;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitForHealth(api: ApiClient, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await api.health();
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("service never became healthy");
      await sleep(250);
    }
  }
}

/** Mean length of the polyline segments the canvas draws for one sample,
 * including the joint from the last observed point to the first prediction. */
function meanDrawnStep(result: SimulationResult): number {
  let total = 0;
  let count = 0;
  result.samples[0].agents.forEach((agent, i) => {
    for (let frame = 1; frame <= agent.positions.length; frame++) {
      const a = agentPositionAtFrame(result, 0, i, frame - 1);
      const b = agentPositionAtFrame(result, 0, i, frame);
      total += Math.hypot(b[0] - a[0], b[1] - a[1]);
      count += 1;
    }
  });
  return total / count;
}

function meanServedSpeed(result: SimulationResult): number {
  const speeds = result.samples[0].agents.flatMap((a) => a.speeds_used);
  return speeds.reduce((s, v) => s + v, 0) / speeds.length;
}

describe.skipIf(!hasBackend)("console round trip", () => {
  let dir = "";
  let server: ChildProcess | null = null;
  let api: ApiClient;
  let info: ModelInfo;

  beforeAll(async () => {
    dir = mkdtempSync(join(tmpdir(), "csg-console-"));
    writeFileSync(join(dir, "config.yaml"), CONFIG);
    const train = spawnSync(
      "csg",
      ["train", "--config", join(dir, "config.yaml"), "--no-figures"],
      { cwd: dir, encoding: "utf8", timeout: 180_000 },
    );
    if (train.status !== 0) {
      throw new Error(`backend training failed:\n${train.stdout}\n${train.stderr}`);
    }
    server = spawn(
      "csg",
      [
        "serve",
        "--checkpoint", join(dir, "run", "checkpoint.ckpt"),
        "--data", join(dir, "run", "dataset.csv"),
        "--bind", `127.0.0.1:${PORT}`,
      ],
      { stdio: "ignore" },
    );
    api = new ApiClient(`http://127.0.0.1:${PORT}`);
    await waitForHealth(api, 30_000);
    info = await api.modelInfo();
  }, 240_000);

  afterAll(() => {
    server?.kill();
    if (dir !== "") rmSync(dir, { recursive: true, force: true });
  });

  it(
    "re-simulates a slider change in under a second with faithful step lengths",
    async () => {
      let state: ConsoleState = initialState();
      state = scenesLoaded(state, await api.listScenes());
      expect(state.scenes.length).toBeGreaterThan(0);

      const detail = await api.getScene(state.scenes[0].scene_id);
      state = sceneSelected(state, detail, info.scaler);
      expect(state.conditions).toHaveLength(detail.n_agents);

      // first pass at a slow global condition
      state = setGlobalCondition(state, 0.2);
      expect(firstError(state.conditions, state.k, state.seed)).toBeNull();
      const slow = await api.simulate({
        scene_id: detail.scene_id,
        condition: state.conditions,
        k: state.k,
        seed: state.seed,
      });
      state = resultLoaded(state, slow);

      // the interactive loop under test: slider to 0.8, simulate again
      const start = performance.now();
      state = setGlobalCondition(state, 0.8);
      const fast = await api.simulate({
        scene_id: detail.scene_id,
        condition: state.conditions,
        k: state.k,
        seed: state.seed,
      });
      state = resultLoaded(state, fast);
      const elapsedMs = performance.now() - start;
      expect(elapsedMs).toBeLessThan(1000);

      // what the canvas would draw must order the same way as what the
      // service says it fed the decoder
      const slowStep = meanDrawnStep(slow);
      const fastStep = meanDrawnStep(fast);
      const slowServed = meanServedSpeed(slow);
      const fastServed = meanServedSpeed(fast);
      expect(fastServed).toBeGreaterThan(slowServed);
      expect(fastStep > slowStep).toBe(fastServed > slowServed);

      // each run's drawn steps, rescaled to the conditioning unit, sit
      // closer to their own condition than to the other run's condition
      const slowScaled = applyScaler(slowStep, info.scaler);
      const fastScaled = applyScaler(fastStep, info.scaler);
      expect(Math.abs(fastScaled - 0.8)).toBeLessThan(Math.abs(slowScaled - 0.8));
      expect(Math.abs(slowScaled - 0.2)).toBeLessThan(Math.abs(fastScaled - 0.2));

      // clicking simulate again without changing anything redraws the
      // exact same overlay (timing metadata aside)
      const repeat = await api.simulate({
        scene_id: detail.scene_id,
        condition: state.conditions,
        k: state.k,
        seed: state.seed,
      });
      expect(repeat.samples).toEqual(fast.samples);
      expect(repeat.observed).toEqual(fast.observed);
      expect(repeat.ground_truth).toEqual(fast.ground_truth);
    },
    60_000,
  );
});
