/** Mirrors of the JSON shapes the service emits. The console treats these as
 * the single source of truth and never recomputes model quantities. */

export type Point = [number, number];

export interface Health {
  status: string;
  checkpoint_id: string;
}

export interface ScalerInfo {
  min_speed: number;
  max_speed: number;
}

export interface ModelInfo {
  checkpoint_id: string;
  checkpoint_path: string;
  step: number;
  config: Record<string, unknown>;
  scaler: ScalerInfo;
  label_vocabulary: string[];
  n_scenes: number;
}

export interface SceneSummary {
  scene_id: number;
  n_agents: number;
  obs_len: number;
  pred_len: number;
  agent_types: string[];
  mean_scaled_speed: number;
  speed_fold: string;
}

export interface SceneTrack {
  agent_id: number;
  agent_type: string;
  observed: Point[];
  future: Point[];
}

export interface SceneDetail extends SceneSummary {
  tracks: SceneTrack[];
}

export interface SampleAgent {
  agent_id: number;
  agent_type: string;
  positions: Point[];
  speeds_used: number[];
  ade?: number;
  fde?: number;
}

/** [frame, agent_id, agent_id] as reported by the backend collision scan. */
export type CollidingPair = [number, number, number];

export interface Sample {
  k: number;
  agents: SampleAgent[];
  colliding_pairs: CollidingPair[];
}

export interface ObservedTrack {
  agent_id: number;
  agent_type: string;
  positions: Point[];
}

export interface GroundTruthTrack {
  agent_id: number;
  positions: Point[];
}

export interface SimulationMetadata {
  checkpoint_id: string;
  scene_id: number | null;
  seed: number;
  k: number;
  collision_threshold: number;
  frame_interval: number;
  elapsed_ms: number;
}

export interface SimulationResult {
  samples: Sample[];
  observed: ObservedTrack[];
  ground_truth: GroundTruthTrack[] | null;
  metadata: SimulationMetadata;
}

export interface SimulateRequest {
  scene_id: number;
  condition: number | number[];
  k: number;
  seed: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  field?: string;
}
