"""Adversarial training: alternating discriminator and generator updates.

Per batch the discriminator takes one or more binary cross-entropy steps on
real sequences against generated ones (produced without gradient tracking,
so its updates never touch the generator), then the generator takes one step
on a weighted sum of three terms:

* an adversarial term; the default is the non-saturating form
  ``-log C(fake)``, with the saturating ``-log(1 - C(fake))`` available via
  ``adversarial_form: literal``
* an L2 term on predicted displacements (teacher-forced rollout)
* an L1 term on forecast speeds

Both players use Adam. Everything is driven by one seeded generator in a
fixed consumption order, so identical config + data + seed reproduces the
loss log bit for bit.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .checkpoint import CsgCheckpoint, save_checkpoint
from .data import Scene, SpeedScaler, derive_speeds
from .model import (
    Batch,
    CsgConfig,
    Discriminator,
    Generator,
    discriminator_score,
    generator_forward,
    init_discriminator,
    init_generator,
)
from .nn import Adam

__all__ = [
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "discriminator_step",
    "generator_step",
    "train",
    "validation_ade",
    "build_checkpoint",
    "METRICS_COLUMNS",
]

METRICS_COLUMNS = ["epoch", "d_loss", "g_adv", "l2", "l1", "val_ade"]

ADVERSARIAL_FORMS = ("non_saturating", "literal")


class TrainingDiverged(RuntimeError):
    """A loss went NaN/Inf; the run is aborted with diagnostics."""


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    lr_g: float = 1e-3
    lr_d: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_adv: float = 1.0
    lambda_l2: float = 1.0
    lambda_l1: float = 1.0
    d_steps: int = 1
    seed: int = 7
    val_fraction: float = 0.1
    checkpoint_every: int = 0  # epochs; 0 disables periodic checkpoints
    adversarial_form: str = "non_saturating"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.d_steps < 1:
            raise ValueError("epochs, batch_size and d_steps must be positive")
        if self.adversarial_form not in ADVERSARIAL_FORMS:
            raise ValueError(
                f"adversarial_form must be one of {ADVERSARIAL_FORMS}, "
                f"got {self.adversarial_form!r}"
            )
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")
        for name in ("lr_g", "lr_d", "lambda_adv", "lambda_l2", "lambda_l1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def _log_eps(dtype) -> float:
    return 1e-7 if dtype == np.float32 else 1e-12


def _bce(scores: Tensor, target_real: bool) -> Tensor:
    """Mean binary cross-entropy of sigmoid scores against a constant target."""
    eps = _log_eps(scores.data.dtype)
    inner = ad.add(scores, eps) if target_real else ad.add(ad.sub(1.0, scores), eps)
    return ad.neg(ad.mean(ad.log(inner)))


def _full_disp_steps(batch: Batch, pred_steps: list[Tensor] | list[np.ndarray]) -> list[Tensor]:
    """Observed ground-truth displacements followed by predicted ones."""
    dt = batch.dtype
    steps = [ad.tensor(batch.displacements[t], dtype=dt) for t in range(batch.obs_len)]
    for p in pred_steps:
        steps.append(p if isinstance(p, Tensor) else ad.tensor(p, dtype=dt))
    return steps


def discriminator_step(
    gen: Generator,
    disc: Discriminator,
    batch: Batch,
    opt_d: Adam,
    rng: np.random.Generator,
) -> float:
    """One Adam update on the discriminator; generator parameters frozen."""
    # the fake rollout is produced outside any tape, so no gradient can reach
    # the generator from this step
    rollout = generator_forward(gen, batch, "train", rng)
    fake_disp = [t.data for t in rollout.disp_tensors]
    opt_d.zero_grad()
    with Tape() as tape:
        real = discriminator_score(
            disc, _full_disp_steps(batch, list(batch.displacements[batch.obs_len:])),
            batch.scaled_speeds, batch.labels,
        )
        fake = discriminator_score(
            disc, _full_disp_steps(batch, fake_disp), batch.scaled_speeds, batch.labels
        )
        loss = ad.scale(ad.add(_bce(real, True), _bce(fake, False)), 0.5)
        tape.backward(loss)
    opt_d.step()
    return loss.item()


def generator_step(
    gen: Generator,
    disc: Discriminator,
    batch: Batch,
    opt_g: Adam,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[float, float, float, float]:
    """One Adam update on the generator. Returns (total, adv, l2, l1)."""
    dt = batch.dtype
    eps = _log_eps(dt)
    opt_g.zero_grad()
    # discriminator grads are also populated below but its optimizer never
    # sees them; clear so they cannot leak into the next discriminator step
    ad.zero_grads(disc.named_params())
    with Tape() as tape:
        rollout = generator_forward(gen, batch, "train", rng)
        fake = discriminator_score(
            disc,
            _full_disp_steps(batch, rollout.disp_tensors),
            batch.scaled_speeds,
            batch.labels,
        )
        if cfg.adversarial_form == "literal":
            adv = ad.neg(ad.mean(ad.log(ad.add(ad.sub(1.0, fake), eps))))
        else:
            adv = ad.neg(ad.mean(ad.log(ad.add(fake, eps))))

        gt_disp = batch.displacements[batch.obs_len :]
        errs = [
            ad.sub(p, ad.tensor(gt_disp[j], dtype=dt))
            for j, p in enumerate(rollout.disp_tensors)
        ]
        sq = ad.concat([ad.mul(e, e) for e in errs], axis=0)
        l2 = ad.mean(sq)

        gt_speed = batch.scaled_speeds[batch.obs_len :]
        devs = [
            ad.absolute(ad.sub(s, ad.tensor(gt_speed[j][:, None], dtype=dt)))
            for j, s in enumerate(rollout.speed_tensors)
        ]
        l1 = ad.mean(ad.concat(devs, axis=0))

        total = ad.add(
            ad.add(ad.scale(adv, cfg.lambda_adv), ad.scale(l2, cfg.lambda_l2)),
            ad.scale(l1, cfg.lambda_l1),
        )
        tape.backward(total)
    opt_g.step()
    return total.item(), adv.item(), l2.item(), l1.item()


def validation_ade(
    gen: Generator,
    scenes: list[Scene],
    scaler: SpeedScaler,
    rng: np.random.Generator,
) -> float:
    """Single-sample displacement error on held-out scenes, in meters."""
    from .evaluation import ade  # local import to avoid a cycle

    if not scenes:
        return float("nan")
    total = 0.0
    count = 0
    vocab = gen.config.label_vocabulary
    for scene in scenes:
        batch = Batch.from_scenes([scene], scaler, vocab, gen.config.dtype)
        rollout = generator_forward(gen, batch, "predict", rng)
        pred = rollout.positions(batch)
        truth = batch.future_positions()
        for a in range(batch.n_agents):
            total += ade(truth[:, a], pred[:, a])
            count += 1
    return total / count


@dataclass
class TrainResult:
    generator: Generator
    discriminator: Discriminator
    scaler: SpeedScaler
    metrics: list[dict]
    checkpoint_path: str | None
    train_scenes: list[Scene]
    val_scenes: list[Scene]
    steps: int


def _fit_scaler(scenes: list[Scene]) -> SpeedScaler:
    speeds = np.concatenate(
        [derive_speeds(t.positions) for s in scenes for t in s.tracks]
    )
    return SpeedScaler.fit(speeds)


def _append_metrics(path: str, row: dict, write_header: bool) -> None:
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(METRICS_COLUMNS)
        writer.writerow([row[c] for c in METRICS_COLUMNS])


def train(
    scenes: list[Scene],
    model_cfg: CsgConfig,
    train_cfg: TrainConfig,
    out_dir: str | None = None,
    on_epoch=None,
) -> TrainResult:
    """Run the full loop over ``scenes`` and return the trained pair.

    When ``out_dir`` is given, an append-only ``metrics.csv`` plus periodic
    and final checkpoints are written there. ``on_epoch`` receives each
    metrics row as it is produced.
    """
    if not scenes:
        raise ValueError("cannot train on an empty scene list")
    rng = np.random.default_rng(train_cfg.seed)

    order = rng.permutation(len(scenes))
    n_val = int(round(train_cfg.val_fraction * len(scenes)))
    val_scenes = [scenes[i] for i in order[:n_val]]
    train_scenes = [scenes[i] for i in order[n_val:]]
    if not train_scenes:
        raise ValueError("validation split consumed every scene")

    scaler = _fit_scaler(train_scenes)
    gen = init_generator(model_cfg, rng)
    disc = init_discriminator(model_cfg, rng)
    opt_g = Adam(gen.named_params(), train_cfg.lr_g, train_cfg.beta1, train_cfg.beta2, train_cfg.eps)
    opt_d = Adam(disc.named_params(), train_cfg.lr_d, train_cfg.beta1, train_cfg.beta2, train_cfg.eps)

    metrics_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        metrics_path = os.path.join(out_dir, "metrics.csv")

    vocab = model_cfg.label_vocabulary
    dtype = model_cfg.dtype
    batches_template = list(range(len(train_scenes)))
    metrics: list[dict] = []
    steps = 0
    for epoch in range(1, train_cfg.epochs + 1):
        perm = rng.permutation(batches_template)
        sums = {"d_loss": 0.0, "g_adv": 0.0, "l2": 0.0, "l1": 0.0}
        n_batches = 0
        for start in range(0, len(perm), train_cfg.batch_size):
            idx = perm[start : start + train_cfg.batch_size]
            batch = Batch.from_scenes([train_scenes[i] for i in idx], scaler, vocab, dtype)
            d_loss = 0.0
            for _ in range(train_cfg.d_steps):
                d_loss = discriminator_step(gen, disc, batch, opt_d, rng)
            total, adv, l2, l1 = generator_step(gen, disc, batch, opt_g, train_cfg, rng)
            if not all(np.isfinite(v) for v in (d_loss, total, adv, l2, l1)):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {n_batches}: "
                    f"d={d_loss} g={total} adv={adv} l2={l2} l1={l1}"
                )
            sums["d_loss"] += d_loss
            sums["g_adv"] += adv
            sums["l2"] += l2
            sums["l1"] += l1
            n_batches += 1
            steps += 1

        row = {k: v / n_batches for k, v in sums.items()}
        row["epoch"] = epoch
        row["val_ade"] = validation_ade(gen, val_scenes, scaler, rng)
        metrics.append(row)
        if metrics_path is not None:
            _append_metrics(metrics_path, row, write_header=(epoch == 1))
        if on_epoch is not None:
            on_epoch(row)
        if (
            out_dir is not None
            and train_cfg.checkpoint_every > 0
            and epoch % train_cfg.checkpoint_every == 0
            and epoch < train_cfg.epochs
        ):
            _save(gen, disc, scaler, steps, rng, os.path.join(out_dir, f"checkpoint_epoch{epoch}.ckpt"))

    checkpoint_path = None
    if out_dir is not None:
        checkpoint_path = os.path.join(out_dir, "checkpoint.ckpt")
        _save(gen, disc, scaler, steps, rng, checkpoint_path)

    return TrainResult(
        generator=gen,
        discriminator=disc,
        scaler=scaler,
        metrics=metrics,
        checkpoint_path=checkpoint_path,
        train_scenes=train_scenes,
        val_scenes=val_scenes,
        steps=steps,
    )


def build_checkpoint(
    gen: Generator,
    disc: Discriminator,
    scaler: SpeedScaler,
    steps: int,
    rng: np.random.Generator | None = None,
) -> CsgCheckpoint:
    params = {f"gen.{k}": v.data.copy() for k, v in gen.named_params().items()}
    params.update({f"disc.{k}": v.data.copy() for k, v in disc.named_params().items()})
    return CsgCheckpoint(
        config=gen.config,
        params=params,
        scaler=scaler,
        step=steps,
        rng_state=rng.bit_generator.state if rng is not None else None,
    )


def _save(gen, disc, scaler, steps, rng, path) -> str:
    return save_checkpoint(build_checkpoint(gen, disc, scaler, steps, rng), path)
