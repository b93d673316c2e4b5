"""Trajectory metrics and evaluation protocols.

ADE, FDE and the collision rate are written with explicit sequential
accumulation (frames ascending, scenes in input order) instead of vectorized
reductions. The sums involved are tiny, and a fixed accumulation order makes
the numbers reproducible to the last bit against any straightforward
re-implementation, which is how they are verified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FOLD_NAMES, Scene, SpeedScaler, split_speed_folds
from .model import Batch, Generator, generator_forward

__all__ = [
    "DEFAULT_COLLISION_THRESHOLD",
    "DEFAULT_FOLD_CONDITIONS",
    "ade",
    "fde",
    "collision_rate",
    "speed_compliance",
    "BestOfK",
    "best_of_k",
    "FoldReportRow",
    "extrapolation_report",
    "format_table",
    "write_rows_csv",
]

DEFAULT_COLLISION_THRESHOLD = 0.10

# representative scaled-speed condition per fold: interval midpoints
DEFAULT_FOLD_CONDITIONS = {"slow": 0.165, "medium": 0.495, "fast": 0.83}


def _dist(ax: float, ay: float, bx: float, by: float) -> float:
    dx = ax - bx
    dy = ay - by
    return math.sqrt(dx * dx + dy * dy)


def ade(truth: np.ndarray, predicted: np.ndarray) -> float:
    """Mean Euclidean displacement error over one agent's predicted steps."""
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 2 or t.shape[1] != 2 or len(t) == 0:
        raise ValueError(f"ade needs matching [T, 2] arrays, got {t.shape} and {p.shape}")
    total = 0.0
    for k in range(len(t)):
        total += _dist(t[k, 0], t[k, 1], p[k, 0], p[k, 1])
    return total / len(t)


def fde(truth: np.ndarray, predicted: np.ndarray) -> float:
    """Euclidean error at the final predicted step."""
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 2 or t.shape[1] != 2 or len(t) == 0:
        raise ValueError(f"fde needs matching [T, 2] arrays, got {t.shape} and {p.shape}")
    return _dist(t[-1, 0], t[-1, 1], p[-1, 0], p[-1, 1])


def collision_rate(
    scene_positions: list[np.ndarray],
    threshold: float = DEFAULT_COLLISION_THRESHOLD,
) -> float:
    """Percentage of agent pairs closer than ``threshold`` per frame.

    Input is one ``[frames, agents, 2]`` array per scene (predicted frames
    only). Per frame: colliding unordered pairs divided by all pairs; frames
    with fewer than two agents contribute zero. The per-frame fractions are
    averaged over frames, then over scenes, and reported times 100.
    """
    if not scene_positions:
        raise ValueError("collision_rate needs at least one scene")
    scene_total = 0.0
    for pos in scene_positions:
        pos = np.asarray(pos, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[2] != 2 or pos.shape[0] == 0:
            raise ValueError(f"scene positions must be [frames, agents, 2], got {pos.shape}")
        frames, agents = pos.shape[0], pos.shape[1]
        pairs = agents * (agents - 1) // 2
        frame_total = 0.0
        for f in range(frames):
            if pairs == 0:
                continue
            hits = 0
            for i in range(agents):
                for j in range(i + 1, agents):
                    if _dist(pos[f, i, 0], pos[f, i, 1], pos[f, j, 0], pos[f, j, 1]) < threshold:
                        hits += 1
            frame_total += hits / pairs
        scene_total += frame_total / frames
    return 100.0 * scene_total / len(scene_positions)


def speed_compliance(
    displacements: np.ndarray,
    conditions: np.ndarray,
    scaler: SpeedScaler,
) -> float:
    """Mean |scaled generated step length - conditioned scaled speed|.

    ``displacements`` is [pred, R, 2]; ``conditions`` is [R, pred] in scaled
    units. Generated step lengths are scaled (and clamped) with the same
    scaler that produced the conditions.
    """
    d = np.asarray(displacements, dtype=np.float64)
    c = np.asarray(conditions, dtype=np.float64)
    if d.ndim != 3 or d.shape[2] != 2:
        raise ValueError(f"displacements must be [pred, R, 2], got {d.shape}")
    if c.shape != (d.shape[1], d.shape[0]):
        raise ValueError(
            f"conditions must be [R, pred] = ({d.shape[1]}, {d.shape[0]}), got {c.shape}"
        )
    lengths = np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2)  # [pred, R]
    scaled = scaler.apply(lengths)
    return float(np.mean(np.abs(scaled - c.T)))


@dataclass
class BestOfK:
    ade: float
    fde: float
    positions: np.ndarray  # [pred, A, 2] of the selected sample
    sample_index: int
    k: int
    ades: list[float]


def best_of_k(
    gen: Generator,
    scene: Scene,
    scaler: SpeedScaler,
    k: int,
    rng: np.random.Generator,
) -> BestOfK:
    """Draw ``k`` prediction rollouts and keep the lowest-ADE sample.

    The reported FDE belongs to the selected sample, not the FDE minimum.
    Samples are drawn sequentially from ``rng``, so the first draw of a
    larger ``k`` matches a smaller one seeded identically.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    cfg = gen.config
    batch = Batch.from_scenes([scene], scaler, cfg.label_vocabulary, cfg.dtype)
    truth = batch.future_positions()
    best = None
    ades = []
    for s in range(k):
        rollout = generator_forward(gen, batch, "predict", rng)
        pred = rollout.positions(batch)
        scene_ade = 0.0
        for a in range(batch.n_agents):
            scene_ade += ade(truth[:, a], pred[:, a])
        scene_ade /= batch.n_agents
        ades.append(scene_ade)
        if best is None or scene_ade < best[0]:
            best = (scene_ade, s, pred)
    scene_fde = 0.0
    for a in range(batch.n_agents):
        scene_fde += fde(truth[:, a], best[2][:, a])
    scene_fde /= batch.n_agents
    return BestOfK(best[0], scene_fde, best[2], best[1], k, ades)


@dataclass
class FoldReportRow:
    fold: str
    held_out: bool
    n_scenes: int
    condition: float
    compliance: float | None
    collision_pct: float | None
    ground_truth_collision_pct: float | None

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "held_out": self.held_out,
            "n_scenes": self.n_scenes,
            "condition": self.condition,
            "compliance": self.compliance,
            "collision_pct": self.collision_pct,
            "ground_truth_collision_pct": self.ground_truth_collision_pct,
        }


def extrapolation_report(
    gen: Generator,
    scenes: list[Scene],
    scaler: SpeedScaler,
    held_out: str,
    rng: np.random.Generator,
    fold_conditions: dict | None = None,
    threshold: float = DEFAULT_COLLISION_THRESHOLD,
) -> list[FoldReportRow]:
    """Simulate test scenes at the held-out fold's speed condition.

    Scenes are grouped into speed folds; every group is simulated at the
    held-out fold's condition and reported next to its ground-truth collision
    rate. Exactly one row per fold, the held-out one marked. Folds without
    scenes yield empty rows rather than failing, since a regime can be absent
    from a dataset by construction.
    """
    if held_out not in FOLD_NAMES:
        raise ValueError(f"held_out must be one of {FOLD_NAMES}, got {held_out!r}")
    if not scenes:
        raise ValueError("extrapolation_report needs at least one scene")
    conditions = dict(DEFAULT_FOLD_CONDITIONS)
    if fold_conditions:
        conditions.update(fold_conditions)
    condition = float(conditions[held_out])

    folds = split_speed_folds(scenes, scaler)
    cfg = gen.config
    rows = []
    for fold in FOLD_NAMES:
        members = [scenes[i] for i in folds[fold]]
        if not members:
            rows.append(FoldReportRow(fold, fold == held_out, 0, condition, None, None, None))
            continue
        sim_positions = []
        compliance_total = 0.0
        gt_positions = []
        for scene in members:
            batch = Batch.from_scenes([scene], scaler, cfg.label_vocabulary, cfg.dtype)
            rollout = generator_forward(gen, batch, "simulate", rng, conditions=condition)
            cond = np.full((batch.n_agents, batch.pred_len), condition)
            compliance_total += speed_compliance(rollout.displacements(), cond, scaler)
            sim_positions.append(rollout.positions(batch))
            gt_positions.append(batch.future_positions())
        rows.append(
            FoldReportRow(
                fold=fold,
                held_out=fold == held_out,
                n_scenes=len(members),
                condition=condition,
                compliance=compliance_total / len(members),
                collision_pct=collision_rate(sim_positions, threshold),
                ground_truth_collision_pct=collision_rate(gt_positions, threshold),
            )
        )
    return rows


def format_table(rows: list[dict]) -> str:
    """Render dict rows as a plain aligned text table."""
    if not rows:
        return "(empty)"
    cols = list(rows[0].keys())

    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    rendered = [[fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in rendered)) for i, c in enumerate(cols)]
    lines = [
        "  ".join(c.ljust(widths[i]) for i, c in enumerate(cols)),
        "  ".join("-" * widths[i] for i in range(len(cols))),
    ]
    for row in rendered:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(cols))))
    return "\n".join(lines)


def write_rows_csv(path: str, rows: list[dict]) -> None:
    import csv

    if not rows:
        raise ValueError("refusing to write an empty report")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
