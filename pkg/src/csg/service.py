"""HTTP service exposing a trained model for interactive simulation.

All model math stays server side: clients receive absolute positions,
per-agent errors against ground truth when it exists, and collision pairs
already computed at the model's threshold. Errors use one shape everywhere,
``{"code": ..., "message": ..., "field": ...}`` with ``field`` present only
when a specific request field is to blame.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .data import scene_mean_scaled_speed, speed_fold
from .simulation import ModelSnapshot, RequestError, load_snapshot, parse_request, run_simulation

__all__ = ["ModelStore", "create_app"]


class ModelStore:
    """Holds the live snapshot; reload swaps it atomically under a lock."""

    def __init__(self, snapshot: ModelSnapshot):
        self._lock = threading.Lock()
        self._snapshot = snapshot

    @property
    def snapshot(self) -> ModelSnapshot:
        with self._lock:
            return self._snapshot

    def reload(self) -> ModelSnapshot:
        with self._lock:
            current = self._snapshot
        fresh = load_snapshot(current.checkpoint_path, current.data_path)
        with self._lock:
            self._snapshot = fresh
        return fresh


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _scene_summary(snapshot: ModelSnapshot, index: int) -> dict:
    scene = snapshot.scenes[index]
    mean_scaled = scene_mean_scaled_speed(scene, snapshot.scaler)
    return {
        "scene_id": index,
        "n_agents": scene.n_agents,
        "obs_len": scene.obs_len,
        "pred_len": scene.pred_len,
        "agent_types": [t.agent_type for t in scene.tracks],
        "mean_scaled_speed": mean_scaled,
        "speed_fold": speed_fold(mean_scaled),
    }


def create_app(
    checkpoint_path: str,
    data_path: str | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    store = ModelStore(load_snapshot(checkpoint_path, data_path))
    app = FastAPI(title="csg", docs_url=None, redoc_url=None)
    app.state.store = store

    @app.exception_handler(RequestError)
    async def handle_request_error(_: Request, exc: RequestError):
        return _error(422, "invalid_request", exc.message, exc.field)

    @app.exception_handler(Exception)
    async def handle_unexpected(_: Request, exc: Exception):
        return _error(500, "internal_error", str(exc))

    @app.get("/health")
    def health():
        snap = store.snapshot
        return {"status": "ok", "checkpoint_id": snap.checkpoint.checkpoint_id}

    @app.get("/model/info")
    def model_info():
        snap = store.snapshot
        return {
            "checkpoint_id": snap.checkpoint.checkpoint_id,
            "checkpoint_path": snap.checkpoint_path,
            "step": snap.checkpoint.step,
            "config": snap.config.to_dict(),
            "scaler": snap.scaler.to_dict(),
            "label_vocabulary": list(snap.config.label_vocabulary),
            "n_scenes": len(snap.scenes),
        }

    @app.get("/scenes")
    def list_scenes():
        snap = store.snapshot
        return {"scenes": [_scene_summary(snap, i) for i in range(len(snap.scenes))]}

    @app.get("/scenes/{scene_id}")
    def get_scene(scene_id: int):
        snap = store.snapshot
        if not 0 <= scene_id < len(snap.scenes):
            return _error(
                404,
                "not_found",
                f"scene {scene_id} not found ({len(snap.scenes)} scenes mounted)",
                "scene_id",
            )
        scene = snap.scenes[scene_id]
        summary = _scene_summary(snap, scene_id)
        summary["tracks"] = [
            {
                "agent_id": int(t.agent_id),
                "agent_type": t.agent_type,
                "observed": [[float(x), float(y)] for x, y in t.positions[: scene.obs_len]],
                "future": [[float(x), float(y)] for x, y in t.positions[scene.obs_len :]],
            }
            for t in scene.tracks
        ]
        return summary

    @app.post("/simulate")
    async def simulate(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "invalid_json", "request body is not valid JSON")
        snap = store.snapshot
        normalized = parse_request(payload, snap)
        return run_simulation(snap, normalized)

    @app.post("/admin/reload")
    def reload_model():
        fresh = store.reload()
        return {"status": "reloaded", "checkpoint_id": fresh.checkpoint.checkpoint_id}

    if static_dir is not None:
        root = Path(static_dir)
        if not root.is_dir():
            raise FileNotFoundError(f"static console directory not found: {root}")
        app.mount("/", StaticFiles(directory=str(root), html=True), name="console")

    return app
