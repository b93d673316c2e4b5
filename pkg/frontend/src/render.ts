/** Canvas drawing. Pure geometry comes from overlay.ts; this module is the
 * only place that touches a 2D context. */

import type { ConsoleState } from "./state.js";
import { maxFrame } from "./state.js";
import type { Point } from "./types.js";
import {
  agentPositionAtFrame,
  collidingAgentsAtFrame,
  fdeSegments,
  lastObserved,
  scenePoints,
} from "./overlay.js";
import {
  boundsOf,
  fitToBounds,
  toScreen,
  type Viewport,
  type WorldTransform,
} from "./transform.js";

const GROUND_TRUTH_COLOR = "#3b82f6";
const OBSERVED_ALPHA = 0.9;
const SAMPLE_ALPHA = 0.5;

/** Distinct hue per agent, stable under redraws. */
export function agentHue(index: number, count: number): number {
  return Math.round((360 * index) / Math.max(1, count));
}

function polyline(
  ctx: CanvasRenderingContext2D,
  t: WorldTransform,
  points: Point[],
  stroke: string,
  width: number,
  dash: number[] = [],
): void {
  if (points.length < 2) return;
  ctx.save();
  ctx.strokeStyle = stroke;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  const [x0, y0] = toScreen(t, points[0]);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < points.length; i++) {
    const [x, y] = toScreen(t, points[i]);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
  ctx.restore();
}

function dot(
  ctx: CanvasRenderingContext2D,
  t: WorldTransform,
  p: Point,
  fill: string,
  radius: number,
): void {
  const [x, y] = toScreen(t, p);
  ctx.save();
  ctx.fillStyle = fill;
  ctx.beginPath();
  ctx.arc(x, y, radius, 0, 2 * Math.PI);
  ctx.fill();
  ctx.restore();
}

function ring(
  ctx: CanvasRenderingContext2D,
  t: WorldTransform,
  p: Point,
  stroke: string,
  radius: number,
): void {
  const [x, y] = toScreen(t, p);
  ctx.save();
  ctx.strokeStyle = stroke;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(x, y, radius, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.restore();
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  viewport: Viewport,
): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  const scene = state.scene;
  if (scene === null) return;
  const bounds = boundsOf(scenePoints(scene.tracks));
  if (bounds === null) return;
  const t = fitToBounds(bounds, viewport);
  const n = scene.tracks.length;

  scene.tracks.forEach((track, i) => {
    const hue = agentHue(i, n);
    polyline(ctx, t, track.observed, `hsla(${hue}, 70%, 60%, ${OBSERVED_ALPHA})`, 2);
  });

  if (state.overlays.groundTruth) {
    scene.tracks.forEach((track) => {
      const joined = [track.observed[track.observed.length - 1], ...track.future];
      polyline(ctx, t, joined, GROUND_TRUTH_COLOR, 2, [6, 4]);
    });
  }

  const result = state.result;
  if (result === null) {
    // no samples yet: mark where the agents were last seen
    scene.tracks.forEach((track, i) => {
      const hue = agentHue(i, n);
      dot(ctx, t, track.observed[track.observed.length - 1], `hsl(${hue}, 70%, 55%)`, 4);
    });
    return;
  }

  const atEnd = state.frame === maxFrame(state) && state.frame > 0;

  if (state.overlays.samples) {
    result.samples.forEach((sample) => {
      sample.agents.forEach((agent, i) => {
        const hue = agentHue(i, n);
        const path = [lastObserved(result, i), ...agent.positions];
        polyline(ctx, t, path, `hsla(${hue}, 80%, 50%, ${SAMPLE_ALPHA})`, 1.5);
      });
    });
  }

  // current positions, one dot per sample per agent, truth as a blue ring
  result.samples.forEach((sample, s) => {
    const colliding = collidingAgentsAtFrame(sample, state.frame);
    sample.agents.forEach((agent, i) => {
      const hue = agentHue(i, n);
      const p = agentPositionAtFrame(result, s, i, state.frame);
      dot(ctx, t, p, `hsl(${hue}, 80%, 55%)`, 4);
      if (state.overlays.collisions && colliding.has(agent.agent_id)) {
        ring(ctx, t, p, "#ef4444", 9);
      }
    });
  });
  if (result.ground_truth !== null && state.overlays.groundTruth) {
    result.ground_truth.forEach((track, i) => {
      const p =
        state.frame === 0
          ? lastObserved(result, i)
          : track.positions[state.frame - 1];
      ring(ctx, t, p, GROUND_TRUTH_COLOR, 6);
    });
  }

  // endpoint error markers once playback reaches the horizon
  if (atEnd && state.overlays.groundTruth) {
    result.samples.forEach((_, s) => {
      for (const seg of fdeSegments(result, s)) {
        polyline(ctx, t, [seg.from, seg.to], "#f59e0b", 1, [3, 3]);
      }
    });
  }
}
