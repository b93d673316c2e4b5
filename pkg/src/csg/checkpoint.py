"""Checkpoint container: readable JSON header plus raw little-endian blobs.

Layout of a checkpoint file::

    8 bytes   magic  b"CSGCKPT1"
    4 bytes   header length, unsigned little-endian
    N bytes   JSON header (UTF-8, indented): format version, model config,
              scaler bounds, label vocabulary, step counter, rng state,
              per-parameter name/dtype/shape/offset table, blob checksum
    M bytes   parameter blobs, concatenated in sorted-name order

Floats are stored exactly as trained (little-endian float32 or float64), so
save -> load -> save is bit-exact. The file is written to a temp sibling and
renamed, which keeps a crash from leaving a half-written checkpoint behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import SpeedScaler
from .model import CsgConfig, Discriminator, Generator, init_discriminator, init_generator

__all__ = [
    "FORMAT_VERSION",
    "CheckpointError",
    "VersionMismatchError",
    "ChecksumError",
    "ConfigMismatchError",
    "CsgCheckpoint",
    "save_checkpoint",
    "load_checkpoint",
    "build_models",
]

FORMAT_VERSION = 1
_MAGIC = b"CSGCKPT1"


class CheckpointError(RuntimeError):
    """Base class for unreadable or inconsistent checkpoint files."""


class VersionMismatchError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class ConfigMismatchError(CheckpointError):
    pass


@dataclass
class CsgCheckpoint:
    config: CsgConfig
    params: dict[str, np.ndarray]
    scaler: SpeedScaler
    step: int = 0
    rng_state: dict | None = None
    checkpoint_id: str = field(default="", compare=False)

    @property
    def label_vocabulary(self) -> tuple:
        return self.config.label_vocabulary


_DTYPE_TAGS = {np.dtype(np.float32): "<f4", np.dtype(np.float64): "<f8"}


def save_checkpoint(ckpt: CsgCheckpoint, path: str) -> str:
    """Write atomically; returns the checkpoint id (blob digest prefix)."""
    entries = []
    blobs = []
    offset = 0
    for name in sorted(ckpt.params):
        arr = np.ascontiguousarray(ckpt.params[name])
        tag = _DTYPE_TAGS.get(arr.dtype)
        if tag is None:
            raise CheckpointError(f"parameter '{name}' has unsupported dtype {arr.dtype}")
        raw = arr.astype(tag, copy=False).tobytes()
        entries.append(
            {"name": name, "dtype": tag, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    digest = hashlib.sha256(blob).hexdigest()

    header = {
        "format_version": FORMAT_VERSION,
        "config": ckpt.config.to_dict(),
        "scaler": ckpt.scaler.to_dict(),
        "label_vocabulary": list(ckpt.config.label_vocabulary),
        "step": int(ckpt.step),
        "rng_state": ckpt.rng_state,
        "params": entries,
        "blob_sha256": digest,
    }
    head = json.dumps(header, indent=2, sort_keys=True).encode("utf-8")

    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        fh.write(blob)
    os.replace(tmp, path)
    ckpt.checkpoint_id = digest[:12]
    return ckpt.checkpoint_id


def load_checkpoint(path: str, expected_config: CsgConfig | None = None) -> CsgCheckpoint:
    """Read and verify a checkpoint; every corruption mode raises distinctly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(_MAGIC) + 4 or data[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a csg checkpoint (bad magic)")
    (head_len,) = struct.unpack("<I", data[len(_MAGIC) : len(_MAGIC) + 4])
    head_start = len(_MAGIC) + 4
    if len(data) < head_start + head_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[head_start : head_start + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, this build reads {FORMAT_VERSION}"
        )

    blob = data[head_start + head_len :]
    expected_bytes = sum(e["nbytes"] for e in header["params"])
    if len(blob) != expected_bytes:
        raise CheckpointError(
            f"{path}: blob is {len(blob)} bytes, header declares {expected_bytes}"
        )
    digest = hashlib.sha256(blob).hexdigest()
    if digest != header["blob_sha256"]:
        raise ChecksumError(f"{path}: parameter blob checksum mismatch")

    config = CsgConfig.from_dict(header["config"])
    if expected_config is not None and config.to_dict() != expected_config.to_dict():
        diffs = [
            k
            for k in expected_config.to_dict()
            if expected_config.to_dict()[k] != config.to_dict().get(k)
        ]
        raise ConfigMismatchError(
            f"{path}: stored config differs from the expected one in: {', '.join(diffs)}"
        )

    params = {}
    for e in header["params"]:
        arr = np.frombuffer(
            blob, dtype=np.dtype(e["dtype"]), count=int(np.prod(e["shape"], dtype=np.int64)) if e["shape"] else 1,
            offset=e["offset"],
        )
        params[e["name"]] = arr.reshape(e["shape"]).copy()

    ckpt = CsgCheckpoint(
        config=config,
        params=params,
        scaler=SpeedScaler.from_dict(header["scaler"]),
        step=int(header.get("step", 0)),
        rng_state=header.get("rng_state"),
        checkpoint_id=digest[:12],
    )
    return ckpt


def _load_group(target, stored: dict, prefix: str, path_hint: str) -> None:
    own = target.named_params()
    want = {f"{prefix}.{k}" for k in own}
    have = {k for k in stored if k.startswith(f"{prefix}.")}
    if want != have:
        missing = sorted(want - have)
        extra = sorted(have - want)
        raise ConfigMismatchError(
            f"{path_hint}: parameter set mismatch for '{prefix}'"
            + (f"; missing {missing}" if missing else "")
            + (f"; unexpected {extra}" if extra else "")
        )
    for k, tensor in own.items():
        arr = stored[f"{prefix}.{k}"]
        if tuple(arr.shape) != tensor.shape:
            raise ConfigMismatchError(
                f"{path_hint}: parameter '{prefix}.{k}' has shape {tuple(arr.shape)}, "
                f"model expects {tensor.shape}"
            )
        tensor.data = arr.astype(tensor.data.dtype, copy=True)


def build_models(ckpt: CsgCheckpoint) -> tuple[Generator, Discriminator]:
    """Reconstruct the trained pair from stored arrays (shape-checked)."""
    rng = np.random.default_rng(0)  # layout only; weights are overwritten
    gen = init_generator(ckpt.config, rng)
    disc = init_discriminator(ckpt.config, rng)
    hint = f"checkpoint {ckpt.checkpoint_id or '<unsaved>'}"
    _load_group(gen, ckpt.params, "gen", hint)
    _load_group(disc, ckpt.params, "disc", hint)
    return gen, disc
