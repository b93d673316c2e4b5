"""Report figures rendered to files next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_scene_rollouts",
    "plot_training_curves",
    "plot_eval_summary",
    "plot_extrapolation",
]

OBSERVED_COLOR = "0.45"
TRUTH_COLOR = "tab:blue"
SAMPLE_CMAP = plt.get_cmap("tab10")


def plot_scene_rollouts(
    observed: np.ndarray,
    truth: np.ndarray | None,
    samples: list[np.ndarray],
    path: str,
    title: str | None = None,
) -> None:
    """Overlay observed history, ground truth and generated samples.

    ``observed`` is [obs, A, 2]; ``truth`` and each sample are [pred, A, 2].
    """
    fig, axis = plt.subplots(figsize=(6.0, 6.0))
    n_agents = observed.shape[1]
    for a in range(n_agents):
        axis.plot(
            observed[:, a, 0], observed[:, a, 1],
            color=OBSERVED_COLOR, lw=1.6, label="observed" if a == 0 else None,
        )
        axis.plot(observed[-1, a, 0], observed[-1, a, 1], "o", color=OBSERVED_COLOR, ms=4)
        if truth is not None:
            seg = np.concatenate([observed[-1:, a], truth[:, a]], axis=0)
            axis.plot(
                seg[:, 0], seg[:, 1],
                color=TRUTH_COLOR, lw=1.8, label="ground truth" if a == 0 else None,
            )
    for k, sample in enumerate(samples):
        color = SAMPLE_CMAP(k % 10)
        for a in range(n_agents):
            seg = np.concatenate([observed[-1:, a], sample[:, a]], axis=0)
            axis.plot(
                seg[:, 0], seg[:, 1],
                color=color, lw=1.1, ls="--", alpha=0.85,
                label=f"sample {k}" if a == 0 and k < 6 else None,
            )
    axis.set_aspect("equal", adjustable="datalim")
    axis.set_xlabel("x [m]")
    axis.set_ylabel("y [m]")
    if title:
        axis.set_title(title)
    axis.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_training_curves(metrics: list[dict], path: str) -> None:
    epochs = [m["epoch"] for m in metrics]
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    for key in ("d_loss", "g_adv", "l2", "l1"):
        left.plot(epochs, [m[key] for m in metrics], label=key)
    left.set_xlabel("epoch")
    left.set_ylabel("loss")
    left.legend(fontsize=8)
    right.plot(epochs, [m["val_ade"] for m in metrics], color="tab:red")
    right.set_xlabel("epoch")
    right.set_ylabel("validation ADE [m]")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_eval_summary(per_seed: list[dict], path: str) -> None:
    """Bar chart of per-seed ADE/FDE with the collision rate alongside."""
    seeds = [str(r["seed"]) for r in per_seed]
    x = np.arange(len(seeds))
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    width = 0.38
    left.bar(x - width / 2, [r["ade"] for r in per_seed], width, label="ADE")
    left.bar(x + width / 2, [r["fde"] for r in per_seed], width, label="FDE")
    left.set_xticks(x, seeds)
    left.set_xlabel("seed")
    left.set_ylabel("meters")
    left.legend(fontsize=8)
    right.bar(x, [r["collision_pct"] for r in per_seed], width, color="tab:orange")
    right.set_xticks(x, seeds)
    right.set_xlabel("seed")
    right.set_ylabel("collisions [%]")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_extrapolation(rows: list[dict], path: str) -> None:
    folds = [r["fold"] for r in rows]
    x = np.arange(len(folds))
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.5, 3.8))
    comp = [r["compliance"] if r["compliance"] is not None else 0.0 for r in rows]
    left.bar(x, comp, color="tab:green")
    left.set_xticks(x, folds)
    left.set_ylabel("speed compliance")
    width = 0.38
    sim = [r["collision_pct"] if r["collision_pct"] is not None else 0.0 for r in rows]
    gt = [
        r["ground_truth_collision_pct"]
        if r["ground_truth_collision_pct"] is not None
        else 0.0
        for r in rows
    ]
    right.bar(x - width / 2, sim, width, label="simulated")
    right.bar(x + width / 2, gt, width, label="ground truth")
    right.set_xticks(x, folds)
    right.set_ylabel("collisions [%]")
    right.legend(fontsize=8)
    for axis, held in ((left, rows), (right, rows)):
        for i, r in enumerate(held):
            if r["held_out"]:
                axis.get_xticklabels()[i].set_fontweight("bold")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
