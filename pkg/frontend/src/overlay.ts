/** Pure geometry read out of a SimulationResult for the renderer and the
 * playback readouts. Frame 0 is the last observed position; frames 1 and up
 * index into the predicted horizon. */

import type {
  Point,
  Sample,
  ScalerInfo,
  SimulationResult,
} from "./types.js";

export function lastObserved(result: SimulationResult, agentIndex: number): Point {
  const obs = result.observed[agentIndex].positions;
  return obs[obs.length - 1];
}

export function agentPositionAtFrame(
  result: SimulationResult,
  sampleIndex: number,
  agentIndex: number,
  frame: number,
): Point {
  if (frame <= 0) return lastObserved(result, agentIndex);
  return result.samples[sampleIndex].agents[agentIndex].positions[frame - 1];
}

/** Agent ids the backend flagged as colliding at this frame (1-based frames
 * map to the backend's 0-based predicted frame index). */
export function collidingAgentsAtFrame(sample: Sample, frame: number): Set<number> {
  const out = new Set<number>();
  if (frame <= 0) return out;
  for (const [f, a, b] of sample.colliding_pairs) {
    if (f === frame - 1) {
      out.add(a);
      out.add(b);
    }
  }
  return out;
}

export interface FdeSegment {
  agentId: number;
  from: Point;
  to: Point;
}

/** Final-frame marker per agent: ground-truth endpoint to sample endpoint. */
export function fdeSegments(result: SimulationResult, sampleIndex: number): FdeSegment[] {
  if (result.ground_truth === null) return [];
  const sample = result.samples[sampleIndex];
  return sample.agents.map((agent, i) => {
    const truth = result.ground_truth![i].positions;
    return {
      agentId: agent.agent_id,
      from: truth[truth.length - 1],
      to: agent.positions[agent.positions.length - 1],
    };
  });
}

export interface SpeedReadout {
  scaled: number;
  metersPerSecond: number;
}

/** Mean conditioning speed the decoder consumed at this frame, in both the
 * scaled unit and meters/second. Everything comes from served numbers: the
 * speeds from the sample, the range from /model/info, the frame interval
 * from the result metadata. */
export function speedReadoutAtFrame(
  result: SimulationResult,
  sampleIndex: number,
  frame: number,
  scaler: ScalerInfo,
): SpeedReadout | null {
  if (frame <= 0) return null;
  const agents = result.samples[sampleIndex].agents;
  let total = 0;
  for (const agent of agents) total += agent.speeds_used[frame - 1];
  const scaled = total / agents.length;
  const raw = scaler.min_speed + scaled * (scaler.max_speed - scaler.min_speed);
  return { scaled, metersPerSecond: raw / result.metadata.frame_interval };
}

/** All scene points (observed plus future) for the fit-to-bounds transform,
 * so the view stays put when samples come and go. */
export function scenePoints(tracks: { observed: Point[]; future: Point[] }[]): Point[] {
  const out: Point[] = [];
  for (const t of tracks) {
    out.push(...t.observed, ...t.future);
  }
  return out;
}
