"""Dense tensors with reverse-mode automatic differentiation.

The whole model stack is built from the operations in this module. Gradients
are recorded on an explicit :class:`Tape` (a Wengert list): while a tape is
active on the current thread, every differentiable op appends its backward
rule, and ``Tape.backward`` replays the list in reverse, accumulating
gradients additively into ``Tensor.grad``. With no active tape, ops are plain
forward numpy calls, which is how inference and data preparation run.

Deliberate restrictions:

* no broadcasting between tensors; shapes must match exactly, scalars being
  the only exception (``ShapeMismatchError`` otherwise)
* a tape is single use and confined to one thread; independent tapes may run
  concurrently on separate threads
* dual precision: float64 (default, used by every correctness test) and
  float32 (training speed)

NaN/Inf screening of op outputs can be switched on with
:func:`set_debug_checks`; it is off by default because the check costs a full
pass over every result.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "ShapeMismatchError",
    "TapeError",
    "NonFiniteError",
    "tensor",
    "param",
    "zeros",
    "set_debug_checks",
    "active_tape",
    "backward",
    "zero_grads",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "neg",
    "sigmoid",
    "tanh",
    "relu",
    "concat",
    "softmax",
    "reduce_max",
    "reduce_sum",
    "mean",
    "log",
    "absolute",
    "add_bias",
    "transpose",
    "slice_axis",
    "reshape",
    "gather_rows",
    "expand_last",
    "sample_gaussian",
]

FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_debug_checks = False


class ShapeMismatchError(ValueError):
    """Raised when operand shapes are incompatible for an op."""


class TapeError(RuntimeError):
    """Raised on tape misuse: reuse, empty backward, unrecorded loss."""


class NonFiniteError(FloatingPointError):
    """Raised in debug mode when an op produces NaN or Inf."""


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every created tensor (slow, for tests)."""
    global _debug_checks
    _debug_checks = bool(enabled)


def _screen(arr: np.ndarray) -> None:
    if _debug_checks and not np.all(np.isfinite(arr)):
        raise NonFiniteError("tensor contains NaN or Inf")


class Tensor:
    """A dense float array plus a gradient slot.

    Tensors are treated as immutable once created; the only sanctioned
    mutation is a training loop updating parameter ``data`` between tapes.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, dtype=None, requires_grad: bool = False):
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype in FLOAT_DTYPES:
                dtype = data.dtype
            else:
                dtype = np.float64
        arr = np.array(data, dtype=dtype)
        _screen(arr)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool = False) -> "Tensor":
        # Internal fast path for op outputs: no copy, no dtype coercion.
        _screen(arr)
        out = object.__new__(cls)
        out.data = arr
        out.requires_grad = requires_grad
        out.grad = None
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"

    # Small conveniences; everything routes through the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)


def tensor(data, dtype=None) -> Tensor:
    """Build a constant (non-differentiable) tensor."""
    return Tensor(data, dtype=dtype, requires_grad=False)


def param(data, dtype=None) -> Tensor:
    """Build a trainable leaf tensor."""
    return Tensor(data, dtype=dtype, requires_grad=True)


def zeros(shape, dtype=np.float64, requires_grad: bool = False) -> Tensor:
    return Tensor._wrap(np.zeros(shape, dtype=dtype), requires_grad)


_local = threading.local()


def _tape_stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Ordered record of executed ops for one forward pass.

    Entries are appended in execution order, so every op's inputs precede it;
    ``backward`` walks the list in reverse. One backward pass per tape:
    a second call raises :class:`TapeError`.
    """

    __slots__ = ("_ops", "_spent", "_out_ids")

    def __init__(self):
        self._ops: list = []
        self._spent = False
        self._out_ids: set[int] = set()

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise TapeError("tape stack corrupted: exiting a tape that is not on top")
        stack.pop()

    def __len__(self) -> int:
        return len(self._ops)

    def _record(self, out: Tensor, inputs: tuple, rule: Callable) -> None:
        if self._spent:
            raise TapeError("tape already consumed by backward; record ops on a fresh tape")
        self._ops.append((out, inputs, rule))
        self._out_ids.add(id(out))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(t) into ``t.grad`` for every tensor on the tape."""
        if self._spent:
            raise TapeError("backward already ran on this tape")
        if not self._ops:
            raise TapeError("tape is empty; nothing was recorded")
        if loss.shape != ():
            raise ShapeMismatchError(f"backward needs a scalar loss, got shape {loss.shape}")
        if id(loss) not in self._out_ids:
            raise TapeError("loss was not produced under this tape")
        self._spent = True
        loss.grad = np.ones((), dtype=loss.data.dtype)
        for out, inputs, rule in reversed(self._ops):
            g = out.grad
            if g is None:
                continue
            grads = rule(g)
            for inp, gi in zip(inputs, grads):
                if gi is None or not inp.requires_grad:
                    continue
                if inp.grad is None:
                    inp.grad = np.array(gi, dtype=inp.data.dtype)
                else:
                    inp.grad += gi


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Run backward on ``tape`` (default: the innermost active tape)."""
    t = tape or active_tape()
    if t is None:
        raise TapeError("no active tape; wrap the forward pass in `with Tape() as tape:`")
    t.backward(loss)


def zero_grads(params) -> None:
    """Clear gradient slots; accepts an iterable or a name->Tensor mapping."""
    values = params.values() if hasattr(params, "values") else params
    for p in values:
        p.grad = None


def _emit(out_data: np.ndarray, inputs: tuple, rule: Callable) -> Tensor:
    tape = active_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(out_data, requires_grad=track)
    if track:
        tape._record(out, inputs, rule)
    return out


def _as_scalar(x, dtype) -> np.ndarray | None:
    if isinstance(x, (int, float, np.floating, np.integer)):
        return np.asarray(x, dtype=dtype)
    return None


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: shapes {a.shape} and {b.shape} differ")
    if a.dtype != b.dtype:
        raise ShapeMismatchError(f"{op}: dtypes {a.dtype} and {b.dtype} differ")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeMismatchError(f"matmul needs 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    ad, bd = a.data, b.data

    def rule(g):
        return g @ bd.T, ad.T @ g

    return _emit(ad @ bd, (a, b), rule)


def add(a: Tensor, b) -> Tensor:
    s = _as_scalar(b, a.dtype)
    if s is not None:
        return _emit(a.data + s, (a,), lambda g: (g,))
    _check_same_shape("add", a, b)
    return _emit(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    if isinstance(a, Tensor):
        s = _as_scalar(b, a.dtype)
        if s is not None:
            return _emit(a.data - s, (a,), lambda g: (g,))
        _check_same_shape("sub", a, b)
        return _emit(a.data - b.data, (a, b), lambda g: (g, -g))
    # scalar minus tensor
    s = _as_scalar(a, b.dtype)
    if s is None:
        raise TypeError("sub expects at least one Tensor operand")
    return _emit(s - b.data, (b,), lambda g: (-g,))


def mul(a: Tensor, b) -> Tensor:
    s = _as_scalar(b, a.dtype)
    if s is not None:
        sv = s

        def rule_s(g):
            return (g * sv,)

        return _emit(a.data * sv, (a,), rule_s)
    _check_same_shape("mul", a, b)
    ad, bd = a.data, b.data

    def rule(g):
        return g * bd, g * ad

    return _emit(ad * bd, (a, b), rule)


def scale(a: Tensor, s: float) -> Tensor:
    """Multiply by a python scalar (kept separate for clarity at call sites)."""
    return mul(a, float(s))


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def sigmoid(x: Tensor) -> Tensor:
    xd = x.data
    out = np.empty_like(xd)
    pos = xd >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    e = np.exp(xd[~pos])
    out[~pos] = e / (1.0 + e)
    # keep the open interval (0, 1) even when the exponent saturates
    tiny = np.nextafter(xd.dtype.type(0), xd.dtype.type(1))
    top = np.nextafter(xd.dtype.type(1), xd.dtype.type(0))
    np.clip(out, tiny, top, out=out)

    def rule(g):
        return (g * out * (1.0 - out),)

    return _emit(out, (x,), rule)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def rule(g):
        return (g * (1.0 - out * out),)

    return _emit(out, (x,), rule)


def relu(x: Tensor) -> Tensor:
    xd = x.data
    out = np.maximum(xd, 0)

    def rule(g):
        return (g * (xd > 0),)

    return _emit(out, (x,), rule)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ShapeMismatchError("concat of an empty sequence")
    nd = parts[0].data.ndim
    if axis < 0:
        axis += nd
    if not 0 <= axis < nd:
        raise ShapeMismatchError(f"concat: axis {axis} out of range for rank {nd}")
    ref = list(parts[0].shape)
    for p in parts[1:]:
        if p.data.ndim != nd:
            raise ShapeMismatchError(
                f"concat: rank mismatch, {parts[0].shape} vs {p.shape}"
            )
        other = list(p.shape)
        if ref[:axis] + ref[axis + 1 :] != other[:axis] + other[axis + 1 :]:
            raise ShapeMismatchError(
                f"concat: non-axis dimensions differ, {parts[0].shape} vs {p.shape}"
            )
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def rule(g):
        return tuple(
            np.take(g, range(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(sizes))
        )

    return _emit(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), rule)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    xd = x.data
    m = np.max(xd, axis=axis, keepdims=True)
    e = np.exp(xd - m)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def rule(g):
        dot = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - dot),)

    return _emit(out, (x,), rule)


def reduce_max(x: Tensor, axis: int) -> Tensor:
    xd = x.data
    if axis < 0:
        axis += xd.ndim
    if not 0 <= axis < xd.ndim:
        raise ShapeMismatchError(f"reduce_max: axis {axis} out of range for rank {xd.ndim}")
    if xd.shape[axis] == 0:
        raise ShapeMismatchError("reduce_max over an empty axis")
    # ties route the gradient to the lowest index, matching np.argmax
    idx = np.argmax(xd, axis=axis)
    out = np.take_along_axis(xd, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def rule(g):
        gx = np.zeros_like(xd)
        np.put_along_axis(
            gx, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis
        )
        return (gx,)

    return _emit(out, (x,), rule)


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    xd = x.data
    if axis is None:
        def rule_all(g):
            return (np.broadcast_to(g, xd.shape),)

        return _emit(np.asarray(xd.sum(), dtype=xd.dtype), (x,), rule_all)
    if axis < 0:
        axis += xd.ndim
    if not 0 <= axis < xd.ndim:
        raise ShapeMismatchError(f"reduce_sum: axis {axis} out of range for rank {xd.ndim}")

    def rule(g):
        return (np.broadcast_to(np.expand_dims(g, axis), xd.shape),)

    return _emit(xd.sum(axis=axis), (x,), rule)


def mean(x: Tensor) -> Tensor:
    if x.size == 0:
        raise ShapeMismatchError("mean of an empty tensor")
    return scale(reduce_sum(x), 1.0 / x.size)


def log(x: Tensor) -> Tensor:
    xd = x.data
    out = np.log(xd)

    def rule(g):
        return (g / xd,)

    return _emit(out, (x,), rule)


def absolute(x: Tensor) -> Tensor:
    xd = x.data

    def rule(g):
        return (g * np.sign(xd),)

    return _emit(np.abs(xd), (x,), rule)


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """Add a rank-1 bias to the trailing axis of every row of ``x``."""
    if b.data.ndim != 1 or x.data.ndim < 1 or x.shape[-1] != b.shape[0]:
        raise ShapeMismatchError(f"add_bias: shapes {x.shape} and {b.shape} do not align")
    if x.dtype != b.dtype:
        raise ShapeMismatchError(f"add_bias: dtypes {x.dtype} and {b.dtype} differ")
    lead = tuple(range(x.data.ndim - 1))

    def rule(g):
        return g, g.sum(axis=lead) if lead else g

    return _emit(x.data + b.data, (x, b), rule)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeMismatchError(f"transpose needs a 2-d tensor, got {x.shape}")

    def rule(g):
        return (g.T,)

    return _emit(x.data.T, (x,), rule)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    xd = x.data
    if axis < 0:
        axis += xd.ndim
    if not 0 <= axis < xd.ndim:
        raise ShapeMismatchError(f"slice_axis: axis {axis} out of range for rank {xd.ndim}")
    if not 0 <= start < stop <= xd.shape[axis]:
        raise ShapeMismatchError(
            f"slice_axis: [{start}:{stop}] invalid for axis {axis} of shape {x.shape}"
        )
    index = tuple(slice(None) if i != axis else slice(start, stop) for i in range(xd.ndim))

    def rule(g):
        gx = np.zeros_like(xd)
        gx[index] = g
        return (gx,)

    return _emit(xd[index], (x,), rule)


def reshape(x: Tensor, shape) -> Tensor:
    xd = x.data
    out = xd.reshape(shape)

    def rule(g):
        return (g.reshape(xd.shape),)

    return _emit(out, (x,), rule)


def gather_rows(x: Tensor, indices) -> Tensor:
    """Select rows of a 2-d tensor; repeated indices accumulate gradient."""
    if x.data.ndim != 2:
        raise ShapeMismatchError(f"gather_rows needs a 2-d tensor, got {x.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeMismatchError("gather_rows: indices must be 1-d")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ShapeMismatchError(
            f"gather_rows: index out of range for {x.shape[0]} rows"
        )
    xd = x.data

    def rule(g):
        gx = np.zeros_like(xd)
        np.add.at(gx, idx, g)
        return (gx,)

    return _emit(xd[idx], (x,), rule)


def expand_last(x: Tensor, k: int) -> Tensor:
    """Repeat a trailing singleton axis ``k`` times (explicit, not broadcast)."""
    xd = x.data
    if xd.ndim < 1 or xd.shape[-1] != 1:
        raise ShapeMismatchError(f"expand_last needs a trailing axis of 1, got {x.shape}")

    def rule(g):
        return (g.sum(axis=-1, keepdims=True),)

    return _emit(np.repeat(xd, k, axis=-1), (x,), rule)


def sample_gaussian(shape, seed, dtype=np.float64) -> Tensor:
    """Draw N(0, 1) noise; deterministic for an int seed or a passed Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Tensor._wrap(rng.standard_normal(shape, dtype=dtype))
