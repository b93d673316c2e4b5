"""Command line entry points.

Every report-producing subcommand writes delimited output and renders its
matplotlib figures next to it. Usage problems exit with code 2, a diverged
training run with code 1.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click
import numpy as np
import yaml

from . import evaluation, figures
from .data import (
    FOLD_NAMES,
    export_labeled_csv,
    generate_synthetic,
    load_dataset,
    load_synthetic_config,
)
from .model import Batch, CsgConfig, generator_forward
from .simulation import RequestError, load_snapshot, parse_request, run_simulation
from .training import TrainConfig, TrainingDiverged, train

__all__ = ["main"]

_TRAIN_CONFIG_KEYS = {"data", "model", "train", "out"}
_DATA_KEYS = {"path", "synthetic"}


def _read_train_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise click.UsageError(f"{path}: config must be a YAML mapping")
    unknown = set(raw) - _TRAIN_CONFIG_KEYS
    if unknown:
        raise click.UsageError(f"{path}: unknown top-level keys: {', '.join(sorted(unknown))}")
    data = raw.get("data") or {}
    if not isinstance(data, dict):
        raise click.UsageError(f"{path}: data section must be a mapping")
    bad = set(data) - _DATA_KEYS
    if bad:
        raise click.UsageError(f"{path}: unknown data keys: {', '.join(sorted(bad))}")
    return raw


def _build_configs(raw: dict, source: str) -> tuple[CsgConfig, TrainConfig]:
    try:
        return (
            CsgConfig.from_dict(raw.get("model") or {}),
            TrainConfig.from_dict(raw.get("train") or {}),
        )
    except (ValueError, TypeError) as exc:
        raise click.UsageError(f"{source}: {exc}") from None


def _resolve_scenes(data_path, synthetic_spec, obs_len, pred_len):
    """Load from a dataset path or generate from a synthetic spec (not both)."""
    if (data_path is None) == (synthetic_spec is None):
        raise click.UsageError(
            "missing dataset path: provide data.path or data.synthetic in the "
            "config (or --data / --synthetic)"
        )
    if data_path is not None:
        if not os.path.exists(data_path):
            raise click.UsageError(f"dataset path does not exist: {data_path}")
        scenes = load_dataset(data_path, obs_len=obs_len, pred_len=pred_len)
        if not scenes:
            raise click.UsageError(
                f"{data_path}: no complete windows of length {obs_len + pred_len}"
            )
        return scenes
    try:
        cfg = load_synthetic_config(synthetic_spec)
    except (OSError, ValueError, yaml.YAMLError) as exc:
        raise click.UsageError(f"synthetic config: {exc}") from None
    return generate_synthetic(
        cfg["regimes"],
        cfg["scenes_per_regime"],
        obs_len=cfg.get("obs_len", obs_len),
        pred_len=cfg.get("pred_len", pred_len),
        frame_interval=cfg.get("frame_interval", 0.4),
        seed=cfg.get("seed", 0),
    )


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise click.UsageError(f"--seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise click.UsageError("--seeds is empty")
    return seeds


@click.group()
def main():
    """Train, evaluate and serve speed-conditioned trajectory models."""


@main.command(name="train")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML with data/model/train/out sections.")
@click.option("--data", type=click.Path(), default=None, help="Dataset path override.")
@click.option("--synthetic", type=click.Path(exists=True), default=None,
              help="Synthetic generator YAML override.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory override.")
@click.option("--epochs", type=int, default=None, help="Override epoch count.")
@click.option("--seed", type=int, default=None, help="Override training seed.")
@click.option("--figures/--no-figures", "with_figures", default=True, show_default=True)
def train_cmd(config_path, data, synthetic, out_dir, epochs, seed, with_figures):
    """Train a model; writes metrics, checkpoints and figures to the out dir."""
    raw = _read_train_config(config_path)
    model_cfg, train_cfg = _build_configs(raw, config_path or "config")
    if epochs is not None:
        train_cfg.epochs = epochs
    if seed is not None:
        train_cfg.seed = seed
    try:
        train_cfg.validate()
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None

    section = raw.get("data") or {}
    data_path = data if data is not None else section.get("path")
    synthetic_spec = synthetic if synthetic is not None else section.get("synthetic")
    if data is not None:
        synthetic_spec = None
    elif synthetic is not None:
        data_path = None
    scenes = _resolve_scenes(data_path, synthetic_spec, model_cfg.obs_len, model_cfg.pred_len)

    out_dir = out_dir if out_dir is not None else raw.get("out")
    if out_dir is None:
        raise click.UsageError("no output directory: set out: in the config or pass --out")
    os.makedirs(out_dir, exist_ok=True)
    if synthetic_spec is not None:
        export_labeled_csv(scenes, Path(out_dir) / "dataset.csv")

    def report(row):
        click.echo(
            f"epoch {row['epoch']:>3}  d={row['d_loss']:.4f}  adv={row['g_adv']:.4f}  "
            f"l2={row['l2']:.4f}  l1={row['l1']:.4f}  val_ade={row['val_ade']:.4f}"
        )

    try:
        result = train(scenes, model_cfg, train_cfg, out_dir=out_dir, on_epoch=report)
    except TrainingDiverged as exc:
        raise click.ClickException(f"training diverged: {exc}") from None

    if with_figures:
        figures.plot_training_curves(result.metrics, str(Path(out_dir) / "training_curves.png"))
        if result.val_scenes:
            scene = result.val_scenes[0]
            batch = Batch.from_scenes(
                [scene], result.scaler, model_cfg.label_vocabulary, model_cfg.dtype
            )
            rng = np.random.default_rng(train_cfg.seed)
            samples = [
                generator_forward(result.generator, batch, "predict", rng).positions(batch)
                for _ in range(3)
            ]
            figures.plot_scene_rollouts(
                batch.positions[: model_cfg.obs_len],
                batch.future_positions(),
                samples,
                str(Path(out_dir) / "rollouts.png"),
                title="validation scene, 3 prediction samples",
            )
    click.echo(f"checkpoint: {result.checkpoint_path}")


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--k", type=int, default=20, show_default=True, help="Samples per scene.")
@click.option("--seeds", default="0", show_default=True, help="Comma-separated run seeds.")
@click.option("--threshold", type=float, default=evaluation.DEFAULT_COLLISION_THRESHOLD, show_default=True)
def evaluate(checkpoint, data, out_dir, k, seeds, threshold):
    """Best-of-K accuracy and collision rate, per seed plus mean/variance."""
    seed_list = _parse_seeds(seeds)
    if k < 1:
        raise click.UsageError("--k must be at least 1")
    snapshot = load_snapshot(checkpoint, data)
    if not snapshot.scenes:
        raise click.UsageError(f"{data}: no scenes for this model's window")
    os.makedirs(out_dir, exist_ok=True)

    rows = []
    for seed in seed_list:
        rng = np.random.default_rng(seed)
        ades, fdes, best_positions = [], [], []
        for scene in snapshot.scenes:
            best = evaluation.best_of_k(snapshot.generator, scene, snapshot.scaler, k, rng)
            ades.append(best.ade)
            fdes.append(best.fde)
            best_positions.append(best.positions)
        rows.append(
            {
                "seed": seed,
                "k": k,
                "n_scenes": len(snapshot.scenes),
                "ade": float(np.mean(ades)),
                "fde": float(np.mean(fdes)),
                "collision_pct": evaluation.collision_rate(best_positions, threshold),
            }
        )
        click.echo(
            f"seed {seed}: ade={rows[-1]['ade']:.4f} fde={rows[-1]['fde']:.4f} "
            f"collisions={rows[-1]['collision_pct']:.3f}%"
        )

    summary = {"k": k, "n_seeds": len(rows)}
    for key in ("ade", "fde", "collision_pct"):
        values = [r[key] for r in rows]
        summary[f"{key}_mean"] = float(np.mean(values))
        summary[f"{key}_var"] = float(np.var(values))
    csv_path = Path(out_dir) / "evaluation.csv"
    evaluation.write_rows_csv(str(csv_path), rows)
    evaluation.write_rows_csv(str(Path(out_dir) / "summary.csv"), [summary])
    figures.plot_eval_summary(rows, str(Path(out_dir) / "evaluation.png"))
    click.echo(
        f"over {len(rows)} seed(s): ade {summary['ade_mean']:.4f} "
        f"(var {summary['ade_var']:.6f}), fde {summary['fde_mean']:.4f} "
        f"(var {summary['fde_var']:.6f})"
    )
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--request", "request_path", type=click.Path(exists=True), required=True,
              help="JSON file, same shape as the POST /simulate body.")
@click.option("--data", type=click.Path(exists=True), default=None,
              help="Dataset to resolve scene_id requests against.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Trajectory CSV path; JSON sidecar and figure land next to it.")
def simulate(checkpoint, request_path, data, out_path):
    """Run one simulation request in batch; same semantics as POST /simulate."""
    with open(request_path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"{request_path}: not valid JSON ({exc})") from None

    snapshot = load_snapshot(checkpoint, data)
    try:
        request = parse_request(payload, snapshot)
    except RequestError as exc:
        raise click.UsageError(f"{exc.field}: {exc.message}") from None
    result = run_simulation(snapshot, request)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    obs_len = snapshot.config.obs_len
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,agent_id,agent_type,x,y,sample_k\n")
        for sample in result["samples"]:
            for agent in sample["agents"]:
                for t, pos in enumerate(agent["positions"]):
                    fh.write(
                        f"{obs_len + t},{agent['agent_id']},{agent['agent_type']},"
                        f"{pos[0]!r},{pos[1]!r},{sample['k']}\n"
                    )
    with open(out.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)

    obs = np.array([e["positions"] for e in result["observed"]]).transpose(1, 0, 2)
    truth = None
    if result["ground_truth"] is not None:
        truth = np.array([e["positions"] for e in result["ground_truth"]]).transpose(1, 0, 2)
    samples = [
        np.array([a["positions"] for a in s["agents"]]).transpose(1, 0, 2)
        for s in result["samples"]
    ]
    figures.plot_scene_rollouts(
        obs, truth, samples, str(out.with_suffix(".png")),
        title=f"k={result['metadata']['k']}, seed {result['metadata']['seed']}",
    )
    click.echo(f"wrote {out}")


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--held-out", type=click.Choice(FOLD_NAMES), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threshold", type=float, default=evaluation.DEFAULT_COLLISION_THRESHOLD, show_default=True)
def extrapolate(checkpoint, data, held_out, out_dir, seed, threshold):
    """Simulate every speed fold at a held-out fold's condition."""
    snapshot = load_snapshot(checkpoint, data)
    if not snapshot.scenes:
        raise click.UsageError(f"{data}: no scenes for this model's window")
    rng = np.random.default_rng(seed)
    rows = evaluation.extrapolation_report(
        snapshot.generator, snapshot.scenes, snapshot.scaler, held_out, rng, threshold=threshold
    )
    dict_rows = [r.to_dict() for r in rows]
    os.makedirs(out_dir, exist_ok=True)
    evaluation.write_rows_csv(str(Path(out_dir) / "extrapolation.csv"), dict_rows)
    figures.plot_extrapolation(dict_rows, str(Path(out_dir) / "extrapolation.png"))
    click.echo(evaluation.format_table(dict_rows))


@main.command()
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), default=None)
@click.option("--bind", default="127.0.0.1:8008", show_default=True, help="addr:port to listen on.")
@click.option("--console", type=click.Path(exists=True), default=None,
              help="Static console directory to mount at /.")
def serve(checkpoint, data, bind, console):
    """Run the HTTP simulation service."""
    import uvicorn

    from .service import create_app

    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise click.UsageError(f"--bind must look like addr:port, got {bind!r}")
    app = create_app(checkpoint, data, static_dir=console)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")


if __name__ == "__main__":
    main()
