/** Typed fetch wrappers for the simulation service.
 *
 * Simulation requests supersede each other: starting a new one aborts the
 * previous in-flight request, so the console can never paint a stale result
 * over a newer one.
 */

import type {
  Health,
  ModelInfo,
  SceneDetail,
  SceneSummary,
  SimulateRequest,
  SimulationResult,
  ApiErrorBody,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field: string | undefined;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.field = body.field;
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}

async function asApiError(res: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await res.json()) as ApiErrorBody;
  } catch {
    body = { code: "http_error", message: `${res.status} ${res.statusText}` };
  }
  return new ApiError(res.status, body);
}

export class ApiClient {
  private readonly base: string;
  private inflight: AbortController | null = null;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(`${this.base}${path}`);
    if (!res.ok) throw await asApiError(res);
    return (await res.json()) as T;
  }

  health(): Promise<Health> {
    return this.get<Health>("/health");
  }

  modelInfo(): Promise<ModelInfo> {
    return this.get<ModelInfo>("/model/info");
  }

  async listScenes(): Promise<SceneSummary[]> {
    const body = await this.get<{ scenes: SceneSummary[] }>("/scenes");
    return body.scenes;
  }

  getScene(id: number): Promise<SceneDetail> {
    return this.get<SceneDetail>(`/scenes/${id}`);
  }

  /** POST /simulate; at most one request in flight, later calls win. */
  async simulate(req: SimulateRequest): Promise<SimulationResult> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const res = await fetch(`${this.base}/simulate`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(req),
        signal: controller.signal,
      });
      if (!res.ok) throw await asApiError(res);
      return (await res.json()) as SimulationResult;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
