"""Speed-conditioned trajectory generator and its discriminator.

The generator is an encoder-decoder over per-agent displacement sequences.
Each observed step's displacement, scaled speed actually covered, and one-hot
agent label are embedded and fed to an encoder LSTM whose weights are shared
across agents. At the end of observation an optional neighbor aggregation
summarizes the scene per agent; the encoder state and aggregation are
compressed and concatenated with Gaussian noise into the latent vector that
seeds both the speed forecaster and the decoder. The decoder then rolls out
autoregressively, consuming its own displacement predictions together with
the speed to realize at the next step, which is where conditioning enters:

* ``train``:    ground-truth next speeds (teacher forcing)
* ``predict``:  the forecaster's own autoregressive speed outputs
* ``simulate``: caller-supplied speed conditions in [0, 1]

Everything here is translation invariant by construction: only displacements,
speeds, labels and relative neighbor positions enter the network, never
absolute coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import (
    LABEL_VOCABULARY,
    Scene,
    SceneFeatures,
    SpeedScaler,
    compute_features,
    nearest_neighbor_indices,
)
from .nn import LinearLayer, LstmCell, MlpStack, init_linear, init_lstm, init_mlp

__all__ = [
    "AGGREGATION_KINDS",
    "MODES",
    "CsgConfig",
    "Generator",
    "Discriminator",
    "Batch",
    "Rollout",
    "init_generator",
    "init_discriminator",
    "generator_forward",
    "discriminator_score",
    "normalize_conditions",
    "mean_step_length",
]

AGGREGATION_KINDS = ("none", "pool", "attention", "concat")
MODES = ("train", "predict", "simulate")


@dataclass
class CsgConfig:
    """Dimensions and structural switches for one generator/discriminator pair."""

    embedding_dim: int = 16
    encoder_hidden: int = 32
    decoder_hidden: int = 32
    forecaster_hidden: int = 32
    noise_dim: int = 8
    aggregation: str = "none"
    aggregation_dim: int = 32
    neighbor_count: int = 2
    social_dim: int = 16
    mlp_hidden: int = 32
    disc_embedding_dim: int = 16
    disc_hidden: int = 32
    disc_mlp_hidden: int = 32
    obs_len: int = 8
    pred_len: int = 12
    label_vocabulary: tuple = LABEL_VOCABULARY
    precision: str = "float64"

    def __post_init__(self):
        self.label_vocabulary = tuple(self.label_vocabulary)
        self.validate()

    def validate(self) -> None:
        if self.aggregation not in AGGREGATION_KINDS:
            raise ValueError(
                f"aggregation must be one of {AGGREGATION_KINDS}, got {self.aggregation!r}"
            )
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision!r}")
        positive = {
            "embedding_dim": self.embedding_dim,
            "encoder_hidden": self.encoder_hidden,
            "decoder_hidden": self.decoder_hidden,
            "forecaster_hidden": self.forecaster_hidden,
            "noise_dim": self.noise_dim,
            "mlp_hidden": self.mlp_hidden,
            "disc_embedding_dim": self.disc_embedding_dim,
            "disc_hidden": self.disc_hidden,
            "disc_mlp_hidden": self.disc_mlp_hidden,
            "pred_len": self.pred_len,
        }
        for name, value in positive.items():
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.obs_len < 2:
            raise ValueError("obs_len must be at least 2")
        if self.noise_dim >= self.decoder_hidden:
            raise ValueError(
                "noise_dim must leave room in the decoder hidden state: "
                f"noise {self.noise_dim} >= decoder_hidden {self.decoder_hidden}"
            )
        if self.aggregation != "none":
            if self.neighbor_count < 1:
                raise ValueError("neighbor_count must be at least 1 when aggregating")
            if self.aggregation_dim < 1 or self.social_dim < 1:
                raise ValueError("aggregation_dim and social_dim must be positive")
        if not self.label_vocabulary:
            raise ValueError("label vocabulary cannot be empty")

    @property
    def latent_dim(self) -> int:
        # compressed joint vector; together with the noise it fills the
        # decoder hidden state exactly
        return self.decoder_hidden - self.noise_dim

    @property
    def agg_out_dim(self) -> int:
        return 0 if self.aggregation == "none" else self.aggregation_dim

    @property
    def input_dim(self) -> int:
        # displacement (2) + scaled speed (1) + one-hot label
        return 3 + len(self.label_vocabulary)

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["label_vocabulary"] = list(self.label_vocabulary)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CsgConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


class PoolAggregator:
    """Embed relative positions to every other agent, join with the agent's
    own hidden state through an MLP, and max-pool over the others."""

    def __init__(self, alpha: LinearLayer, mlp: MlpStack, out_dim: int):
        self.alpha = alpha
        self.mlp = mlp
        self.out_dim = out_dim

    def __call__(self, hidden: Tensor, positions: np.ndarray, agent_ids) -> Tensor:
        a = positions.shape[0]
        if a == 1:
            return ad.zeros((1, self.out_dim), dtype=hidden.dtype)
        own = np.repeat(np.arange(a), a - 1)
        other = np.concatenate([[j for j in range(a) if j != i] for i in range(a)])
        rel = (positions[other] - positions[own]).astype(hidden.data.dtype)
        f = self.alpha(ad.tensor(rel, dtype=hidden.dtype))
        h_own = ad.gather_rows(hidden, own)
        joint = self.mlp(ad.concat([h_own, f], axis=1))
        grouped = ad.reshape(joint, (a, a - 1, self.out_dim))
        return ad.reduce_max(grouped, axis=1)

    def named(self, prefix: str) -> dict:
        return {**self.alpha.named(f"{prefix}.alpha"), **self.mlp.named(f"{prefix}.mlp")}


class AttentionAggregator:
    """Soft attention over the N nearest neighbors.

    Scores come from an MLP over (own hidden, embedded relative position);
    values are a linear map of (neighbor hidden, embedded relative position).
    Slots beyond the real neighbor count are masked out of the softmax.
    """

    def __init__(self, alpha: LinearLayer, score: MlpStack, value: LinearLayer, n: int, out_dim: int):
        self.alpha = alpha
        self.score = score
        self.value = value
        self.n = n
        self.out_dim = out_dim

    def __call__(self, hidden: Tensor, positions: np.ndarray, agent_ids) -> Tensor:
        a = positions.shape[0]
        if a == 1:
            return ad.zeros((1, self.out_dim), dtype=hidden.dtype)
        n = self.n
        dtype = hidden.data.dtype
        idx = np.full((a, n), a, dtype=np.intp)  # a = padding row
        rel = np.zeros((a, n, 2), dtype=dtype)
        mask = np.zeros((a, n), dtype=dtype)
        for i in range(a):
            nb = nearest_neighbor_indices(positions, agent_ids, i, n)
            idx[i, : len(nb)] = nb
            rel[i, : len(nb)] = positions[nb] - positions[i]
            mask[i, len(nb) :] = -1e9
        flat_idx = idx.reshape(-1)
        padded = ad.concat([hidden, ad.zeros((1, hidden.shape[1]), dtype=dtype)], axis=0)
        h_nb = ad.gather_rows(padded, flat_idx)
        f = self.alpha(ad.tensor(rel.reshape(a * n, 2), dtype=dtype))
        h_own = ad.gather_rows(hidden, np.repeat(np.arange(a), n))
        logits = ad.reshape(self.score(ad.concat([h_own, f], axis=1)), (a, n))
        weights = ad.softmax(ad.add(logits, ad.tensor(mask, dtype=dtype)), axis=1)
        values = ad.reshape(self.value(ad.concat([h_nb, f], axis=1)), (a, n, self.out_dim))
        w3 = ad.expand_last(ad.reshape(weights, (a, n, 1)), self.out_dim)
        return ad.reduce_sum(ad.mul(w3, values), axis=1)

    def named(self, prefix: str) -> dict:
        return {
            **self.alpha.named(f"{prefix}.alpha"),
            **self.score.named(f"{prefix}.score"),
            **self.value.named(f"{prefix}.value"),
        }


class ConcatAggregator:
    """Own hidden state joined with the N nearest hidden states, nearest
    first, zero-padded when the scene has fewer agents, then compressed."""

    def __init__(self, mlp: MlpStack, n: int, hidden_dim: int, out_dim: int):
        self.mlp = mlp
        self.n = n
        self.hidden_dim = hidden_dim
        self.out_dim = out_dim

    def __call__(self, hidden: Tensor, positions: np.ndarray, agent_ids) -> Tensor:
        a = positions.shape[0]
        n = self.n
        dtype = hidden.data.dtype
        idx = np.full((a, n), a, dtype=np.intp)
        for i in range(a):
            nb = nearest_neighbor_indices(positions, agent_ids, i, n)
            idx[i, : len(nb)] = nb
        padded = ad.concat([hidden, ad.zeros((1, self.hidden_dim), dtype=dtype)], axis=0)
        cols = [hidden] + [ad.gather_rows(padded, idx[:, j]) for j in range(n)]
        return self.mlp(ad.concat(cols, axis=1))

    def named(self, prefix: str) -> dict:
        return self.mlp.named(f"{prefix}.mlp")


class Generator:
    def __init__(
        self,
        config: CsgConfig,
        embed: LinearLayer,
        encoder: LstmCell,
        aggregator,
        latent_mlp: MlpStack,
        sp_proj: LinearLayer | None,
        sp_cell: LstmCell,
        sp_out: LinearLayer,
        dec_embed: LinearLayer,
        dec_cell: LstmCell,
        dec_out: LinearLayer,
    ):
        self.config = config
        self.embed = embed
        self.encoder = encoder
        self.aggregator = aggregator
        self.latent_mlp = latent_mlp
        self.sp_proj = sp_proj
        self.sp_cell = sp_cell
        self.sp_out = sp_out
        self.dec_embed = dec_embed
        self.dec_cell = dec_cell
        self.dec_out = dec_out

    def named_params(self) -> dict:
        out = {}
        out.update(self.embed.named("embed"))
        out.update(self.encoder.named("encoder"))
        if self.aggregator is not None:
            out.update(self.aggregator.named("agg"))
        out.update(self.latent_mlp.named("latent"))
        if self.sp_proj is not None:
            out.update(self.sp_proj.named("sp_proj"))
        out.update(self.sp_cell.named("sp_cell"))
        out.update(self.sp_out.named("sp_out"))
        out.update(self.dec_embed.named("dec_embed"))
        out.update(self.dec_cell.named("dec_cell"))
        out.update(self.dec_out.named("dec_out"))
        return out


class Discriminator:
    def __init__(self, config: CsgConfig, embed: LinearLayer, cell: LstmCell, mlp: MlpStack):
        self.config = config
        self.embed = embed
        self.cell = cell
        self.mlp = mlp

    def named_params(self) -> dict:
        out = {}
        out.update(self.embed.named("embed"))
        out.update(self.cell.named("cell"))
        out.update(self.mlp.named("mlp"))
        return out


def init_generator(config: CsgConfig, rng: np.random.Generator) -> Generator:
    dt = config.dtype
    h = config.encoder_hidden
    embed = init_linear(rng, config.input_dim, config.embedding_dim, None, dt)
    encoder = init_lstm(rng, config.embedding_dim, h, dt)

    agg = None
    kind = config.aggregation
    if kind == "pool":
        alpha = init_linear(rng, 2, config.social_dim, None, dt)
        mlp = init_mlp(
            rng, [h + config.social_dim, config.mlp_hidden, config.aggregation_dim], None, dt
        )
        agg = PoolAggregator(alpha, mlp, config.aggregation_dim)
    elif kind == "attention":
        alpha = init_linear(rng, 2, config.social_dim, None, dt)
        score = init_mlp(rng, [h + config.social_dim, config.mlp_hidden, 1], None, dt)
        value = init_linear(rng, h + config.social_dim, config.aggregation_dim, None, dt)
        agg = AttentionAggregator(alpha, score, value, config.neighbor_count, config.aggregation_dim)
    elif kind == "concat":
        n = config.neighbor_count
        mlp = init_mlp(rng, [(n + 1) * h, config.mlp_hidden, config.aggregation_dim], None, dt)
        agg = ConcatAggregator(mlp, n, h, config.aggregation_dim)

    latent_mlp = init_mlp(
        rng, [h + config.agg_out_dim, config.mlp_hidden, config.latent_dim], None, dt
    )
    sp_proj = None
    if config.forecaster_hidden != config.decoder_hidden:
        sp_proj = init_linear(rng, config.decoder_hidden, config.forecaster_hidden, None, dt)
    sp_cell = init_lstm(rng, 1, config.forecaster_hidden, dt)
    sp_out = init_linear(rng, config.forecaster_hidden, 1, "sigmoid", dt)
    dec_embed = init_linear(rng, config.input_dim, config.embedding_dim, None, dt)
    dec_cell = init_lstm(rng, config.embedding_dim, config.decoder_hidden, dt)
    dec_out = init_linear(rng, config.decoder_hidden, 2, None, dt)
    return Generator(
        config, embed, encoder, agg, latent_mlp, sp_proj, sp_cell, sp_out,
        dec_embed, dec_cell, dec_out,
    )


def init_discriminator(config: CsgConfig, rng: np.random.Generator) -> Discriminator:
    dt = config.dtype
    embed = init_linear(rng, config.input_dim, config.disc_embedding_dim, None, dt)
    cell = init_lstm(rng, config.disc_embedding_dim, config.disc_hidden, dt)
    mlp = init_mlp(
        rng, [config.disc_hidden, config.disc_mlp_hidden, 1], "sigmoid", dt
    )
    return Discriminator(config, embed, cell, mlp)


@dataclass
class Batch:
    """One or more scenes flattened into shared agent-row arrays.

    All per-agent network passes run on the flattened rows at once; the
    aggregation step is the only part that works per scene, through
    ``scene_slices``.
    """

    displacements: np.ndarray  # [L, R, 2]
    scaled_speeds: np.ndarray  # [L, R]
    raw_speeds: np.ndarray  # [L, R]
    labels: np.ndarray  # [R, V]
    positions: np.ndarray  # [L, R, 2] float64
    agent_ids: np.ndarray  # [R]
    scene_slices: list[tuple[int, int]]
    obs_len: int
    pred_len: int
    has_future: bool

    @classmethod
    def from_scenes(
        cls,
        scenes: list[Scene],
        scaler: SpeedScaler,
        vocabulary=LABEL_VOCABULARY,
        dtype=np.float64,
    ) -> "Batch":
        feats = [compute_features(s, scaler, vocabulary, dtype) for s in scenes]
        return cls.from_features(feats, scenes[0].obs_len, scenes[0].pred_len)

    @classmethod
    def from_features(cls, feats: list[SceneFeatures], obs_len: int, pred_len: int) -> "Batch":
        slices = []
        start = 0
        for f in feats:
            a = f.labels.shape[0]
            slices.append((start, start + a))
            start += a
        return cls(
            displacements=np.concatenate([f.displacements for f in feats], axis=1),
            scaled_speeds=np.concatenate([f.scaled_speeds for f in feats], axis=1),
            raw_speeds=np.concatenate([f.raw_speeds for f in feats], axis=1),
            labels=np.concatenate([f.labels for f in feats], axis=0),
            positions=np.concatenate([f.positions for f in feats], axis=1),
            agent_ids=np.concatenate([f.agent_ids for f in feats]),
            scene_slices=slices,
            obs_len=obs_len,
            pred_len=pred_len,
            has_future=all(f.has_future for f in feats),
        )

    @property
    def n_agents(self) -> int:
        return self.labels.shape[0]

    @property
    def dtype(self):
        return self.displacements.dtype

    def last_observed_positions(self) -> np.ndarray:
        return self.positions[self.obs_len - 1]

    def future_positions(self) -> np.ndarray:
        return self.positions[self.obs_len :]


@dataclass
class Rollout:
    """Generator output for one noise draw over a batch."""

    disp_tensors: list[Tensor]  # pred_len entries of [R, 2]
    speed_tensors: list[Tensor] | None  # forecaster outputs [R, 1], None in simulate
    used_speeds: np.ndarray  # [pred_len, R] scaled speeds the decoder consumed
    noise: np.ndarray  # [R, noise_dim]
    obs_len: int
    pred_len: int

    def displacements(self) -> np.ndarray:
        return np.stack([t.data for t in self.disp_tensors], axis=0)

    def forecast_speeds(self) -> np.ndarray | None:
        if self.speed_tensors is None:
            return None
        return np.stack([t.data[:, 0] for t in self.speed_tensors], axis=0)

    def positions(self, batch: Batch) -> np.ndarray:
        """Reconstruct absolute predicted positions [pred_len, R, 2]."""
        disp = self.displacements().astype(np.float64)
        return batch.last_observed_positions()[None, :, :] + np.cumsum(disp, axis=0)


def _step_input(disp: Tensor, speed: Tensor, labels: Tensor) -> Tensor:
    return ad.concat([disp, speed, labels], axis=1)


def _encode(gen: Generator, batch: Batch, labels_t: Tensor) -> Tensor:
    dt = batch.dtype
    h, c = gen.encoder.zero_state(batch.n_agents, dt)
    for t in range(batch.obs_len):
        x = _step_input(
            ad.tensor(batch.displacements[t], dtype=dt),
            ad.tensor(batch.scaled_speeds[t][:, None], dtype=dt),
            labels_t,
        )
        h, c = gen.encoder.step(gen.embed(x), h, c)
    return h


def _aggregate(gen: Generator, batch: Batch, hidden: Tensor) -> Tensor | None:
    if gen.aggregator is None:
        return None
    last_pos = batch.last_observed_positions()
    outs = []
    for start, stop in batch.scene_slices:
        h_scene = ad.slice_axis(hidden, 0, start, stop)
        outs.append(
            gen.aggregator(h_scene, last_pos[start:stop], batch.agent_ids[start:stop])
        )
    return outs[0] if len(outs) == 1 else ad.concat(outs, axis=0)


def _build_latent(gen: Generator, hidden: Tensor, agg: Tensor | None, noise: Tensor) -> Tensor:
    joint = hidden if agg is None else ad.concat([hidden, agg], axis=1)
    return ad.concat([gen.latent_mlp(joint), noise], axis=1)


def _forecast(gen: Generator, batch: Batch, latent: Tensor, mode: str) -> list[Tensor]:
    """Forecast scaled speeds for each prediction step.

    The forecaster LSTM starts from the latent vector, warms up on the
    observed speed sequence and then either keeps consuming ground truth
    (train) or feeds back its own outputs (predict).
    """
    dt = batch.dtype
    h0 = latent if gen.sp_proj is None else gen.sp_proj(latent)
    h = h0
    _, c = gen.sp_cell.zero_state(batch.n_agents, dt)
    out: list[Tensor] = []
    pred = None
    for t in range(batch.obs_len):
        x = ad.tensor(batch.scaled_speeds[t][:, None], dtype=dt)
        h, c = gen.sp_cell.step(x, h, c)
        pred = gen.sp_out(h)
    out.append(pred)  # speed for the first prediction step
    for t in range(batch.obs_len, batch.obs_len + batch.pred_len - 1):
        if mode == "train":
            x = ad.tensor(batch.scaled_speeds[t][:, None], dtype=dt)
        else:
            x = out[-1]
        h, c = gen.sp_cell.step(x, h, c)
        out.append(gen.sp_out(h))
    return out


def normalize_conditions(conditions, n_agents: int, pred_len: int) -> np.ndarray:
    """Expand a speed condition to the per-agent per-step form [R, pred_len].

    Accepts a scalar, one value per agent, or a full per-agent-per-step
    array. Values must already be scaled speeds inside [0, 1].
    """
    arr = np.asarray(conditions, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full((n_agents, pred_len), float(arr))
    elif arr.ndim == 1:
        if arr.shape[0] != n_agents:
            raise ValueError(
                f"per-agent condition needs {n_agents} values, got {arr.shape[0]}"
            )
        arr = np.repeat(arr[:, None], pred_len, axis=1)
    elif arr.ndim == 2:
        if arr.shape != (n_agents, pred_len):
            raise ValueError(
                f"per-step condition needs shape ({n_agents}, {pred_len}), got {arr.shape}"
            )
    else:
        raise ValueError(f"condition rank {arr.ndim} not understood")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("speed conditions must lie in [0, 1]")
    return arr


def generator_forward(
    gen: Generator,
    batch: Batch,
    mode: str,
    rng: np.random.Generator,
    conditions=None,
) -> Rollout:
    """Run one full rollout over a batch; see the module docstring for modes."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    cfg = gen.config
    if batch.obs_len != cfg.obs_len or batch.pred_len != cfg.pred_len:
        raise ValueError(
            f"batch window ({batch.obs_len}+{batch.pred_len}) does not match "
            f"model window ({cfg.obs_len}+{cfg.pred_len})"
        )
    dt = batch.dtype
    r = batch.n_agents
    if mode == "simulate":
        if conditions is None:
            raise ValueError("simulate mode needs speed conditions")
        cond = normalize_conditions(conditions, r, batch.pred_len).astype(dt)
    elif conditions is not None:
        raise ValueError(f"speed conditions are only consumed in simulate mode, not {mode!r}")

    labels_t = ad.tensor(batch.labels, dtype=dt)
    hidden = _encode(gen, batch, labels_t)
    agg = _aggregate(gen, batch, hidden)
    noise = ad.sample_gaussian((r, cfg.noise_dim), rng, dtype=dt)
    latent = _build_latent(gen, hidden, agg, noise)

    speed_tensors: list[Tensor] | None = None
    if mode == "simulate":
        dec_speeds = [ad.tensor(cond[:, j][:, None], dtype=dt) for j in range(batch.pred_len)]
        used = cond.T.astype(np.float64)
    else:
        speed_tensors = _forecast(gen, batch, latent, mode)
        if mode == "train":
            gt = batch.scaled_speeds[batch.obs_len :]
            dec_speeds = [ad.tensor(gt[j][:, None], dtype=dt) for j in range(batch.pred_len)]
            used = gt.astype(np.float64)
        else:
            dec_speeds = speed_tensors
            used = np.stack([t.data[:, 0] for t in speed_tensors]).astype(np.float64)

    h = latent
    _, c = gen.dec_cell.zero_state(r, dt)
    prev_disp = ad.tensor(batch.displacements[batch.obs_len - 1], dtype=dt)
    disp_out: list[Tensor] = []
    for j in range(batch.pred_len):
        x = _step_input(prev_disp, dec_speeds[j], labels_t)
        h, c = gen.dec_cell.step(gen.dec_embed(x), h, c)
        delta = gen.dec_out(h)
        disp_out.append(delta)
        prev_disp = delta

    return Rollout(
        disp_tensors=disp_out,
        speed_tensors=speed_tensors,
        used_speeds=used,
        noise=noise.data.copy(),
        obs_len=batch.obs_len,
        pred_len=batch.pred_len,
    )


def discriminator_score(
    disc: Discriminator,
    disp_steps: list[Tensor],
    scaled_speeds: np.ndarray,
    labels: np.ndarray,
) -> Tensor:
    """Score full displacement sequences; returns per-agent values in (0, 1).

    ``disp_steps`` holds one [R, 2] tensor per frame over the whole window
    (observed plus predicted); speeds and labels are plain arrays since the
    discriminator never differentiates through them.
    """
    cfg = disc.config
    expected = cfg.obs_len + cfg.pred_len
    if len(disp_steps) != expected:
        raise ValueError(f"discriminator needs {expected} steps, got {len(disp_steps)}")
    dt = disp_steps[0].data.dtype
    r = disp_steps[0].shape[0]
    labels_t = ad.tensor(labels, dtype=dt)
    h, c = disc.cell.zero_state(r, dt)
    for t in range(expected):
        x = _step_input(
            disp_steps[t], ad.tensor(scaled_speeds[t][:, None], dtype=dt), labels_t
        )
        h, c = disc.cell.step(disc.embed(x), h, c)
    return disc.mlp(h)


def mean_step_length(displacements: np.ndarray) -> float:
    """Average Euclidean step length of predicted displacements [T, R, 2]."""
    d = np.asarray(displacements, dtype=np.float64)
    return float(np.mean(np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2)))
