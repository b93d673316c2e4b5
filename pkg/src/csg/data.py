"""Trajectory datasets: parsing, scene windows, derived features, synthetics.

Conventions used throughout the package:

* positions are metric 2D coordinates, time-major arrays ``[T, 2]``
* displacement at step t is ``pos[t] - pos[t-1]`` with the first step zero
* raw speed at step t is the Euclidean norm of that displacement, in meters
  per frame, so the first speed is also zero
* scaled speeds come from a min-max :class:`SpeedScaler` fitted on the
  training split only and clamped to [0, 1] everywhere else
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

__all__ = [
    "LABEL_VOCABULARY",
    "TSV_FORMAT",
    "CSV_FORMAT",
    "FOLD_NAMES",
    "ParseError",
    "UnknownLabelError",
    "DegenerateRangeError",
    "AgentTrack",
    "Scene",
    "SceneFeatures",
    "SpeedScaler",
    "parse_trajectory_file",
    "load_dataset",
    "build_scenes",
    "to_displacements",
    "from_displacements",
    "derive_speeds",
    "one_hot_label",
    "nearest_neighbor_indices",
    "nearest_neighbors",
    "scene_mean_scaled_speed",
    "speed_fold",
    "split_speed_folds",
    "compute_features",
    "straight_track",
    "generate_synthetic",
    "load_synthetic_config",
    "export_labeled_csv",
]

LABEL_VOCABULARY = ("pedestrian", "vehicle", "other")
TSV_FORMAT = "tsv-etch-ucy"
CSV_FORMAT = "labeled-csv"
FOLD_NAMES = ("slow", "medium", "fast")

# scaled-speed interval edges for the slow / medium / fast split
_FOLD_EDGES = (0.33, 0.66)


class ParseError(ValueError):
    """A trajectory file line that cannot be interpreted."""


class UnknownLabelError(ValueError):
    """An agent type outside the fixed label vocabulary."""


class DegenerateRangeError(ValueError):
    """Speed scaler fitted on a constant (zero-range) sample."""


@dataclass(frozen=True)
class AgentTrack:
    """One agent's observations: frame ids (ascending) and positions [T, 2]."""

    agent_id: int
    agent_type: str
    frames: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        if len(self.frames) != len(self.positions):
            raise ValueError(
                f"agent {self.agent_id}: {len(self.frames)} frames but "
                f"{len(self.positions)} positions"
            )

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class Scene:
    """Agents observed together over one contiguous window of frames.

    Every track covers all ``obs_len + pred_len`` window frames; the first
    ``obs_len`` are the observed prefix, the rest the prediction horizon.
    """

    tracks: list[AgentTrack]
    frames: np.ndarray
    obs_len: int
    pred_len: int
    frame_interval: float = 0.4

    def __post_init__(self):
        if not self.tracks:
            raise ValueError("a scene needs at least one agent")
        if self.obs_len < 2:
            raise ValueError("obs_len must be at least 2 so speeds have a predecessor")
        if self.pred_len < 1:
            raise ValueError("pred_len must be positive")
        n = self.obs_len + self.pred_len
        if len(self.frames) != n:
            raise ValueError(f"scene has {len(self.frames)} frames, expected {n}")
        for t in self.tracks:
            if len(t) != n:
                raise ValueError(
                    f"agent {t.agent_id} covers {len(t)} frames, window needs {n}"
                )

    @property
    def n_agents(self) -> int:
        return len(self.tracks)

    @property
    def length(self) -> int:
        return self.obs_len + self.pred_len

    def positions_array(self) -> np.ndarray:
        """Stack track positions into [length, n_agents, 2]."""
        return np.stack([t.positions for t in self.tracks], axis=1)


def _parse_number(token: str, line_no: int, path: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: cannot parse number {token!r}") from None


def parse_trajectory_file(path: str, fmt: str) -> list[AgentTrack]:
    """Read a trajectory file into per-agent tracks, frames sorted ascending.

    ``tsv-etch-ucy``: tab-separated ``frame_id agent_id x y``, every agent a
    pedestrian. ``labeled-csv``: header ``frame,agent_id,agent_type,x,y`` with
    types restricted to the fixed vocabulary. Duplicate (frame, agent) pairs
    and malformed lines raise :class:`ParseError` with the line number.
    """
    if fmt == TSV_FORMAT:
        rows = _read_tsv(path)
    elif fmt == CSV_FORMAT:
        rows = _read_labeled_csv(path)
    else:
        raise ValueError(f"unknown trajectory format {fmt!r}")

    seen: set[tuple[int, int]] = set()
    by_agent: dict[int, list[tuple[int, str, float, float]]] = {}
    types: dict[int, str] = {}
    for line_no, frame, agent, agent_type, x, y in rows:
        key = (frame, agent)
        if key in seen:
            raise ParseError(
                f"{path}:{line_no}: duplicate observation for frame {frame}, agent {agent}"
            )
        seen.add(key)
        prior = types.get(agent)
        if prior is not None and prior != agent_type:
            raise ParseError(
                f"{path}:{line_no}: agent {agent} changes type {prior!r} -> {agent_type!r}"
            )
        types[agent] = agent_type
        by_agent.setdefault(agent, []).append((frame, agent_type, x, y))

    tracks = []
    for agent_id in sorted(by_agent):
        obs = sorted(by_agent[agent_id], key=lambda r: r[0])
        frames = np.array([o[0] for o in obs], dtype=np.int64)
        pos = np.array([[o[2], o[3]] for o in obs], dtype=np.float64)
        tracks.append(AgentTrack(agent_id, types[agent_id], frames, pos))
    return tracks


def _read_tsv(path: str):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError(
                    f"{path}:{line_no}: expected 4 tab-separated fields, got {len(parts)}"
                )
            frame = int(_parse_number(parts[0], line_no, path))
            agent = int(_parse_number(parts[1], line_no, path))
            x = _parse_number(parts[2], line_no, path)
            y = _parse_number(parts[3], line_no, path)
            rows.append((line_no, frame, agent, "pedestrian", x, y))
    return rows


_CSV_HEADER = ["frame", "agent_id", "agent_type", "x", "y"]


def _read_labeled_csv(path: str):
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty file, expected header") from None
        if [h.strip() for h in header] != _CSV_HEADER:
            raise ParseError(
                f"{path}:1: bad header {header!r}, expected {','.join(_CSV_HEADER)}"
            )
        for line_no, parts in enumerate(reader, start=2):
            if not parts or (len(parts) == 1 and not parts[0].strip()):
                continue
            if len(parts) != 5:
                raise ParseError(
                    f"{path}:{line_no}: expected 5 fields, got {len(parts)}"
                )
            agent_type = parts[2].strip()
            if agent_type not in LABEL_VOCABULARY:
                raise UnknownLabelError(
                    f"{path}:{line_no}: unknown agent type {agent_type!r}, "
                    f"allowed: {', '.join(LABEL_VOCABULARY)}"
                )
            frame = int(_parse_number(parts[0], line_no, path))
            agent = int(_parse_number(parts[1], line_no, path))
            x = _parse_number(parts[3], line_no, path)
            y = _parse_number(parts[4], line_no, path)
            rows.append((line_no, frame, agent, agent_type, x, y))
    return rows


def detect_format(path: str) -> str:
    return CSV_FORMAT if str(path).lower().endswith(".csv") else TSV_FORMAT


def load_dataset(
    path,
    obs_len: int = 8,
    pred_len: int = 12,
    stride: int = 1,
    frame_interval: float = 0.4,
    fmt: str | None = None,
) -> list[Scene]:
    """Load a file or a directory of trajectory files and window into scenes."""
    import os

    if os.path.isdir(path):
        names = sorted(
            f for f in os.listdir(path) if f.lower().endswith((".txt", ".tsv", ".csv"))
        )
        if not names:
            raise FileNotFoundError(f"no trajectory files under {path}")
        scenes: list[Scene] = []
        for name in names:
            full = os.path.join(path, name)
            tracks = parse_trajectory_file(full, fmt or detect_format(full))
            scenes.extend(build_scenes(tracks, obs_len, pred_len, stride, frame_interval))
        return scenes
    tracks = parse_trajectory_file(path, fmt or detect_format(path))
    return build_scenes(tracks, obs_len, pred_len, stride, frame_interval)


def build_scenes(
    tracks: list[AgentTrack],
    obs_len: int = 8,
    pred_len: int = 12,
    stride: int = 1,
    frame_interval: float = 0.4,
) -> list[Scene]:
    """Slide a window over the global frame grid and keep fully-present agents.

    A window is the next ``obs_len + pred_len`` entries of the sorted set of
    all frame ids. Windows whose frame spacing is not uniform are skipped, so
    positions inside a scene are always equally spaced in time. An agent
    joins a scene only if it appears at every window frame; windows with no
    qualifying agent are dropped.
    """
    if stride < 1:
        raise ValueError("stride must be positive")
    length = obs_len + pred_len
    grid = np.array(sorted({int(f) for t in tracks for f in t.frames}), dtype=np.int64)
    if len(grid) < length:
        return []

    # frame id -> row index per agent, for O(1) presence checks
    index: list[dict[int, int]] = [
        {int(f): i for i, f in enumerate(t.frames)} for t in tracks
    ]

    scenes = []
    for start in range(0, len(grid) - length + 1, stride):
        window = grid[start : start + length]
        steps = np.diff(window)
        if steps.size and not np.all(steps == steps[0]):
            continue
        members = []
        for t, idx in zip(tracks, index):
            rows = [idx.get(int(f)) for f in window]
            if any(r is None for r in rows):
                continue
            members.append(
                AgentTrack(
                    t.agent_id,
                    t.agent_type,
                    window.copy(),
                    t.positions[np.array(rows, dtype=np.intp)].copy(),
                )
            )
        if members:
            scenes.append(Scene(members, window.copy(), obs_len, pred_len, frame_interval))
    return scenes


def to_displacements(positions: np.ndarray) -> np.ndarray:
    """Per-step displacement vectors, first step zero by convention."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) < 1:
        raise ValueError(f"positions must be [T, 2], got {pos.shape}")
    out = np.zeros_like(pos)
    out[1:] = pos[1:] - pos[:-1]
    return out


def from_displacements(origin: np.ndarray, displacements: np.ndarray) -> np.ndarray:
    """Invert :func:`to_displacements`: cumulative sum anchored at ``origin``.

    ``origin`` is the absolute position of the first step, whose displacement
    row is ignored apart from being added as written (zero by convention).
    """
    disp = np.asarray(displacements, dtype=np.float64)
    if disp.ndim != 2 or disp.shape[1] != 2:
        raise ValueError(f"displacements must be [T, 2], got {disp.shape}")
    start = np.asarray(origin, dtype=np.float64).reshape(1, 2)
    body = np.cumsum(disp[1:], axis=0) if len(disp) > 1 else np.zeros((0, 2))
    return np.concatenate([start, start + body], axis=0)


def derive_speeds(positions: np.ndarray) -> np.ndarray:
    """Euclidean step lengths in meters per frame, first entry zero."""
    disp = to_displacements(positions)
    return np.sqrt(disp[:, 0] ** 2 + disp[:, 1] ** 2)


@dataclass
class SpeedScaler:
    """Min-max map from raw speeds (m/frame) onto [0, 1].

    Fitted once on the training split; ``apply`` clamps so unseen extremes
    stay inside the conditioning interval, ``invert`` maps conditions back to
    raw speeds.
    """

    min_speed: float
    max_speed: float

    def __post_init__(self):
        if not math.isfinite(self.min_speed) or not math.isfinite(self.max_speed):
            raise DegenerateRangeError("scaler bounds must be finite")
        if self.max_speed <= self.min_speed:
            raise DegenerateRangeError(
                f"degenerate speed range [{self.min_speed}, {self.max_speed}]"
            )

    @classmethod
    def fit(cls, speeds) -> "SpeedScaler":
        arr = np.asarray(speeds, dtype=np.float64).ravel()
        if arr.size == 0:
            raise DegenerateRangeError("cannot fit a scaler on an empty sample")
        return cls(float(arr.min()), float(arr.max()))

    @property
    def span(self) -> float:
        return self.max_speed - self.min_speed

    def apply(self, speeds):
        scaled = (np.asarray(speeds, dtype=np.float64) - self.min_speed) / self.span
        return np.clip(scaled, 0.0, 1.0)

    def invert(self, scaled):
        return np.asarray(scaled, dtype=np.float64) * self.span + self.min_speed

    def to_dict(self) -> dict:
        return {"min_speed": self.min_speed, "max_speed": self.max_speed}

    @classmethod
    def from_dict(cls, d: dict) -> "SpeedScaler":
        return cls(float(d["min_speed"]), float(d["max_speed"]))


def one_hot_label(agent_type: str, vocabulary=LABEL_VOCABULARY) -> np.ndarray:
    if agent_type not in vocabulary:
        raise UnknownLabelError(
            f"unknown agent type {agent_type!r}, allowed: {', '.join(vocabulary)}"
        )
    out = np.zeros(len(vocabulary), dtype=np.float64)
    out[vocabulary.index(agent_type)] = 1.0
    return out


def nearest_neighbor_indices(
    positions: np.ndarray, agent_ids: np.ndarray, i: int, n: int
) -> np.ndarray:
    """Indices of up to ``n`` other agents, ascending Euclidean distance.

    Ties are broken by agent id so the ordering is total and reproducible.
    """
    pos = np.asarray(positions, dtype=np.float64)
    others = np.array([j for j in range(len(pos)) if j != i], dtype=np.intp)
    if others.size == 0:
        return others
    diff = pos[others] - pos[i]
    dist = np.sqrt(diff[:, 0] ** 2 + diff[:, 1] ** 2)
    order = np.lexsort((np.asarray(agent_ids)[others], dist))
    return others[order[:n]]


def nearest_neighbors(scene: Scene, agent_index: int, t: int, n: int) -> list[int]:
    """Track indices of the up-to-``n`` nearest other agents at frame ``t``."""
    if not 0 <= agent_index < scene.n_agents:
        raise IndexError(f"agent index {agent_index} out of range")
    if not 0 <= t < scene.length:
        raise IndexError(f"frame index {t} out of range")
    pos = scene.positions_array()[t]
    ids = np.array([tr.agent_id for tr in scene.tracks])
    return [int(j) for j in nearest_neighbor_indices(pos, ids, agent_index, n)]


def scene_mean_scaled_speed(scene: Scene, scaler: SpeedScaler) -> float:
    vals = [scaler.apply(derive_speeds(t.positions)) for t in scene.tracks]
    return float(np.mean(np.concatenate(vals)))


def speed_fold(mean_scaled: float) -> str:
    """Fold of a per-scene mean scaled speed: [0, .33) / [.33, .66) / [.66, 1]."""
    if mean_scaled < _FOLD_EDGES[0]:
        return "slow"
    if mean_scaled < _FOLD_EDGES[1]:
        return "medium"
    return "fast"


def split_speed_folds(scenes: list[Scene], scaler: SpeedScaler) -> dict[str, list[int]]:
    """Partition scene indices into the three speed folds (disjoint, exhaustive)."""
    folds: dict[str, list[int]] = {name: [] for name in FOLD_NAMES}
    for i, scene in enumerate(scenes):
        folds[speed_fold(scene_mean_scaled_speed(scene, scaler))].append(i)
    return folds


@dataclass
class SceneFeatures:
    """Model-ready arrays for one scene, time-major over the full window."""

    displacements: np.ndarray  # [L, A, 2]
    raw_speeds: np.ndarray  # [L, A]
    scaled_speeds: np.ndarray  # [L, A]
    labels: np.ndarray  # [A, V]
    positions: np.ndarray  # [L, A, 2]
    agent_ids: np.ndarray  # [A]
    has_future: bool = True


def compute_features(
    scene: Scene, scaler: SpeedScaler, vocabulary=LABEL_VOCABULARY, dtype=np.float64
) -> SceneFeatures:
    pos = scene.positions_array()
    disp = np.stack([to_displacements(t.positions) for t in scene.tracks], axis=1)
    raw = np.stack([derive_speeds(t.positions) for t in scene.tracks], axis=1)
    labels = np.stack([one_hot_label(t.agent_type, vocabulary) for t in scene.tracks])
    return SceneFeatures(
        displacements=disp.astype(dtype),
        raw_speeds=raw.astype(dtype),
        scaled_speeds=scaler.apply(raw).astype(dtype),
        labels=labels.astype(dtype),
        positions=pos.astype(np.float64),
        agent_ids=np.array([t.agent_id for t in scene.tracks], dtype=np.int64),
    )


def straight_track(
    start,
    heading: float,
    speed: float,
    length: int,
    jitter_sd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Constant-velocity positions with optional per-frame Gaussian jitter.

    ``speed`` is meters per frame; with zero jitter the derived raw speed of
    the track equals it exactly (up to float rounding).
    """
    if length < 1:
        raise ValueError("length must be positive")
    steps = np.arange(length, dtype=np.float64)[:, None]
    direction = np.array([math.cos(heading), math.sin(heading)])
    pos = np.asarray(start, dtype=np.float64)[None, :] + steps * speed * direction
    if jitter_sd > 0.0:
        if rng is None:
            raise ValueError("jitter needs an rng")
        pos = pos + rng.normal(0.0, jitter_sd, size=pos.shape)
    return pos


def generate_synthetic(
    regimes: dict,
    scenes_per_regime: int,
    obs_len: int = 8,
    pred_len: int = 12,
    frame_interval: float = 0.4,
    seed: int = 0,
) -> list[Scene]:
    """Build synthetic scenes from named speed regimes.

    Each regime maps a name to ``{speed, jitter_sd, n_agents}`` plus an
    optional ``crossing`` flag that aims agent pairs through a shared point
    mid-window. Fully deterministic for a given seed; regimes are emitted in
    sorted-name order and interleaved per index so folds stay balanced under
    any later split.
    """
    if scenes_per_regime < 1:
        raise ValueError("scenes_per_regime must be positive")
    if not regimes:
        raise ValueError("at least one regime is required")
    rng = np.random.default_rng(seed)
    length = obs_len + pred_len
    frames = np.arange(length, dtype=np.int64)
    scenes = []
    for k in range(scenes_per_regime):
        for name in sorted(regimes):
            spec = regimes[name]
            speed = float(spec["speed"])
            jitter = float(spec.get("jitter_sd", 0.0))
            n_agents = int(spec.get("n_agents", 1))
            crossing = bool(spec.get("crossing", False))
            if speed <= 0 or n_agents < 1:
                raise ValueError(f"regime {name!r}: speed and n_agents must be positive")
            tracks = []
            for a in range(n_agents):
                heading = float(rng.uniform(0.0, 2.0 * math.pi))
                if crossing and a % 2 == 1:
                    # partner of the previous agent, crossing its path at 90 degrees
                    heading = prev_heading + math.pi / 2.0
                if crossing:
                    # aim through a shared point at the middle of the window
                    mid = (length - 1) / 2.0
                    target = rng.uniform(-1.0, 1.0, size=2)
                    start = target - mid * speed * np.array(
                        [math.cos(heading), math.sin(heading)]
                    )
                else:
                    start = rng.uniform(-8.0, 8.0, size=2)
                prev_heading = heading
                pos = straight_track(start, heading, speed, length, jitter, rng)
                tracks.append(AgentTrack(a, "pedestrian", frames.copy(), pos))
            scenes.append(Scene(tracks, frames.copy(), obs_len, pred_len, frame_interval))
    return scenes


_SYNTH_KEYS = {"regimes", "scenes_per_regime", "obs_len", "pred_len", "frame_interval", "seed"}
_REGIME_KEYS = {"speed", "jitter_sd", "n_agents", "crossing"}


def load_synthetic_config(source) -> dict:
    """Read generator settings from a YAML file path or a parsed mapping."""
    if isinstance(source, dict):
        raw = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "regimes" not in raw:
        raise ValueError("synthetic config must be a mapping with a 'regimes' section")
    unknown = set(raw) - _SYNTH_KEYS
    if unknown:
        raise ValueError(f"unknown synthetic config keys: {', '.join(sorted(unknown))}")
    for name, spec in raw["regimes"].items():
        bad = set(spec) - _REGIME_KEYS
        if bad:
            raise ValueError(f"regime {name!r}: unknown keys {', '.join(sorted(bad))}")
    out = dict(raw)
    out.setdefault("scenes_per_regime", 100)
    return out


def export_labeled_csv(scenes: list[Scene], path) -> None:
    """Write scenes to one labeled-csv file, windows kept apart by frame gaps.

    Each scene's frames are rebased to an isolated block and its agent ids
    made globally unique, so re-windowing the file reproduces the same scenes.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for s, scene in enumerate(scenes):
            base = s * 10000
            for k, track in enumerate(scene.tracks):
                for t in range(scene.length):
                    writer.writerow(
                        [
                            base + t,
                            s * 1000 + k,
                            track.agent_type,
                            repr(float(track.positions[t, 0])),
                            repr(float(track.positions[t, 1])),
                        ]
                    )
