"""Shared simulation core used by both the CLI and the HTTP service.

A request selects a scene (by id from a mounted dataset, or inline observed
tracks), a speed condition in scaled [0, 1] units (global, per agent, or per
agent per step), optional labels, a sample count and a seed. Both entry
points normalize through :func:`parse_request` and execute through
:func:`run_simulation`, so a batch run and a service call with the same
checkpoint, request and seed produce identical trajectories.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .checkpoint import CsgCheckpoint, build_models, load_checkpoint
from .data import AgentTrack, Scene, load_dataset
from .evaluation import DEFAULT_COLLISION_THRESHOLD, ade, fde
from .model import Batch, Discriminator, Generator, generator_forward, normalize_conditions

__all__ = [
    "RequestError",
    "ModelSnapshot",
    "load_snapshot",
    "parse_request",
    "run_simulation",
]


class RequestError(ValueError):
    """A simulation request field that fails validation."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field
        self.message = message


@dataclass
class ModelSnapshot:
    """Immutable view of one loaded checkpoint plus an optional dataset."""

    checkpoint: CsgCheckpoint
    generator: Generator
    discriminator: Discriminator
    scenes: list[Scene]
    checkpoint_path: str
    data_path: str | None = None

    @property
    def config(self):
        return self.checkpoint.config

    @property
    def scaler(self):
        return self.checkpoint.scaler


def load_snapshot(checkpoint_path: str, data_path: str | None = None) -> ModelSnapshot:
    ckpt = load_checkpoint(checkpoint_path)
    gen, disc = build_models(ckpt)
    scenes: list[Scene] = []
    if data_path is not None:
        scenes = load_dataset(
            data_path, obs_len=ckpt.config.obs_len, pred_len=ckpt.config.pred_len
        )
    return ModelSnapshot(ckpt, gen, disc, scenes, checkpoint_path, data_path)


@dataclass
class NormalizedRequest:
    scene: Scene
    scene_id: int | None
    conditions: np.ndarray  # [R, pred]
    k: int
    seed: int
    has_future: bool


def _require_int(payload: dict, key: str, default=None, minimum=None):
    value = payload.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise RequestError(key, f"{key} must be an integer")
    if minimum is not None and value < minimum:
        raise RequestError(key, f"{key} must be >= {minimum}")
    return value


def _validate_condition_values(cond, field: str) -> None:
    arr = np.asarray(cond, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise RequestError(field, "condition values must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise RequestError(field, "condition values must lie in [0, 1]")


def _inline_scene(tracks_payload, config) -> Scene:
    obs, pred = config.obs_len, config.pred_len
    if not isinstance(tracks_payload, list) or not tracks_payload:
        raise RequestError("tracks", "tracks must be a non-empty list")
    tracks = []
    for i, entry in enumerate(tracks_payload):
        if not isinstance(entry, dict) or "positions" not in entry:
            raise RequestError("tracks", f"tracks[{i}] needs a positions list")
        pos = np.asarray(entry["positions"], dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise RequestError("tracks", f"tracks[{i}].positions must be [[x, y], ...]")
        if len(pos) != obs:
            raise RequestError(
                "tracks", f"tracks[{i}] has {len(pos)} observed positions, model needs {obs}"
            )
        agent_type = entry.get("agent_type", config.label_vocabulary[0])
        if agent_type not in config.label_vocabulary:
            raise RequestError(
                "tracks",
                f"tracks[{i}].agent_type {agent_type!r} not in vocabulary "
                f"{list(config.label_vocabulary)}",
            )
        agent_id = entry.get("agent_id", i)
        # the horizon is synthesized as standing still; it only fills arrays,
        # prediction never reads it
        future = np.repeat(pos[-1:], pred, axis=0)
        full = np.concatenate([pos, future], axis=0)
        frames = np.arange(obs + pred, dtype=np.int64)
        tracks.append(AgentTrack(int(agent_id), agent_type, frames, full))
    return Scene(tracks, np.arange(obs + pred, dtype=np.int64), obs, pred, 0.4)


def parse_request(payload: dict, snapshot: ModelSnapshot) -> NormalizedRequest:
    if not isinstance(payload, dict):
        raise RequestError("body", "request body must be a JSON object")
    known = {"scene_id", "tracks", "condition", "labels", "k", "seed"}
    unknown = set(payload) - known
    if unknown:
        raise RequestError(sorted(unknown)[0], f"unknown request fields: {', '.join(sorted(unknown))}")

    config = snapshot.config
    scene_id = _require_int(payload, "scene_id", minimum=0)
    has_tracks = payload.get("tracks") is not None
    if (scene_id is None) == (not has_tracks):
        raise RequestError("scene_id", "provide exactly one of scene_id or tracks")

    has_future = False
    if scene_id is not None:
        if scene_id >= len(snapshot.scenes):
            raise RequestError(
                "scene_id", f"scene {scene_id} not found ({len(snapshot.scenes)} scenes mounted)"
            )
        scene = snapshot.scenes[scene_id]
        has_future = True
    else:
        scene = _inline_scene(payload["tracks"], config)

    labels = payload.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != scene.n_agents:
            raise RequestError("labels", f"labels must list one type per agent ({scene.n_agents})")
        for lab in labels:
            if lab not in config.label_vocabulary:
                raise RequestError(
                    "labels", f"label {lab!r} not in vocabulary {list(config.label_vocabulary)}"
                )
        scene = Scene(
            [
                AgentTrack(t.agent_id, lab, t.frames, t.positions)
                for t, lab in zip(scene.tracks, labels)
            ],
            scene.frames,
            scene.obs_len,
            scene.pred_len,
            scene.frame_interval,
        )

    if "condition" not in payload or payload["condition"] is None:
        raise RequestError("condition", "a speed condition is required")
    _validate_condition_values(payload["condition"], "condition")
    try:
        conditions = normalize_conditions(payload["condition"], scene.n_agents, config.pred_len)
    except ValueError as exc:
        raise RequestError("condition", str(exc)) from None

    k = _require_int(payload, "k", default=1, minimum=1)
    seed = payload.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise RequestError("seed", "seed must be an integer")

    return NormalizedRequest(scene, scene_id, conditions, k, seed, has_future)


def _colliding_pairs(positions: np.ndarray, agent_ids, threshold: float) -> list[list]:
    out = []
    frames, agents = positions.shape[0], positions.shape[1]
    for f in range(frames):
        for i in range(agents):
            for j in range(i + 1, agents):
                d = positions[f, i] - positions[f, j]
                if float(np.sqrt(d[0] ** 2 + d[1] ** 2)) < threshold:
                    out.append([f, int(agent_ids[i]), int(agent_ids[j])])
    return out


def run_simulation(
    snapshot: ModelSnapshot,
    request: NormalizedRequest,
    threshold: float = DEFAULT_COLLISION_THRESHOLD,
) -> dict:
    """Execute a normalized request; the result is JSON-shaped throughout."""
    started = time.perf_counter()
    cfg = snapshot.config
    batch = Batch.from_scenes([request.scene], snapshot.scaler, cfg.label_vocabulary, cfg.dtype)
    rng = np.random.default_rng(request.seed)
    truth = batch.future_positions() if request.has_future else None

    samples = []
    for s in range(request.k):
        rollout = generator_forward(
            gen=snapshot.generator,
            batch=batch,
            mode="simulate",
            rng=rng,
            conditions=request.conditions,
        )
        positions = rollout.positions(batch)
        agents = []
        for a, track in enumerate(request.scene.tracks):
            entry = {
                "agent_id": int(track.agent_id),
                "agent_type": track.agent_type,
                "positions": [[float(x), float(y)] for x, y in positions[:, a]],
                "speeds_used": [float(v) for v in rollout.used_speeds[:, a]],
            }
            if truth is not None:
                entry["ade"] = ade(truth[:, a], positions[:, a])
                entry["fde"] = fde(truth[:, a], positions[:, a])
            agents.append(entry)
        samples.append(
            {
                "k": s,
                "agents": agents,
                "colliding_pairs": _colliding_pairs(positions, batch.agent_ids, threshold),
            }
        )

    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return {
        "samples": samples,
        "observed": [
            {
                "agent_id": int(t.agent_id),
                "agent_type": t.agent_type,
                "positions": [[float(x), float(y)] for x, y in t.positions[: cfg.obs_len]],
            }
            for t in request.scene.tracks
        ],
        "ground_truth": None
        if truth is None
        else [
            {
                "agent_id": int(t.agent_id),
                "positions": [[float(x), float(y)] for x, y in truth[:, a]],
            }
            for a, t in enumerate(request.scene.tracks)
        ],
        "metadata": {
            "checkpoint_id": snapshot.checkpoint.checkpoint_id,
            "scene_id": request.scene_id,
            "seed": request.seed,
            "k": request.k,
            "collision_threshold": threshold,
            "frame_interval": request.scene.frame_interval,
            "elapsed_ms": elapsed_ms,
        },
    }
