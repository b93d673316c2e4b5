/** Hand-built service payloads shared across the unit tests. Geometry is
 * kept simple enough to verify expected values by hand. */

import type { ScalerInfo, SceneDetail, SimulationResult } from "../src/types.js";

export const SCALER: ScalerInfo = { min_speed: 0, max_speed: 2 };

export function makeScene(): SceneDetail {
  return {
    scene_id: 3,
    n_agents: 2,
    obs_len: 4,
    pred_len: 3,
    agent_types: ["pedestrian", "vehicle"],
    mean_scaled_speed: 0.5,
    speed_fold: "medium",
    tracks: [
      {
        agent_id: 1,
        agent_type: "pedestrian",
        observed: [[0, 0], [1, 0], [2, 0], [3, 0]],
        future: [[4, 0], [5, 0], [6, 0]],
      },
      {
        agent_id: 2,
        agent_type: "vehicle",
        observed: [[0, 0], [0, 2], [0, 4], [0, 6]],
        future: [[0, 8], [0, 10], [0, 12]],
      },
    ],
  };
}

export function makeResult(): SimulationResult {
  return {
    samples: [
      {
        k: 0,
        agents: [
          {
            agent_id: 1,
            agent_type: "pedestrian",
            positions: [[1, 0], [2, 0], [3, 0]],
            speeds_used: [0.2, 0.4, 0.6],
            ade: 0.5,
            fde: 1.0,
          },
          {
            agent_id: 2,
            agent_type: "vehicle",
            positions: [[0, 2], [0, 3], [0, 4]],
            speeds_used: [0.4, 0.6, 0.8],
          },
        ],
        colliding_pairs: [[1, 1, 2]],
      },
    ],
    observed: [
      { agent_id: 1, agent_type: "pedestrian", positions: [[-1, 0], [0, 0]] },
      { agent_id: 2, agent_type: "vehicle", positions: [[0, 0], [0, 1]] },
    ],
    ground_truth: [
      { agent_id: 1, positions: [[1, 1], [2, 1], [3, 1]] },
      { agent_id: 2, positions: [[0, 2], [1, 3], [1, 4]] },
    ],
    metadata: {
      checkpoint_id: "abc123",
      scene_id: 3,
      seed: 7,
      k: 1,
      collision_threshold: 0.1,
      frame_interval: 0.4,
      elapsed_ms: 12.5,
    },
  };
}
