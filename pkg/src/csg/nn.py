"""Network building blocks on top of the autodiff core.

Layers own their parameter tensors and expose them through ``named(prefix)``
so a model can assemble one flat name -> Tensor mapping for the optimizer and
for checkpointing. Initialization is Xavier-uniform with zero biases; LSTM
forget gates start at 1.0 so cells keep state early in training.
"""

from __future__ import annotations

import math

import numpy as np

from .autodiff import (
    Tensor,
    add,
    add_bias,
    matmul,
    mul,
    param,
    relu,
    sigmoid,
    slice_axis,
    tanh,
    transpose,
    zeros,
)

__all__ = [
    "MissingGradientError",
    "LinearLayer",
    "MlpStack",
    "LstmCell",
    "Adam",
    "xavier_uniform",
    "init_linear",
    "init_mlp",
    "init_lstm",
]

_ACTIVATIONS = {None: lambda t: t, "relu": relu, "sigmoid": sigmoid, "tanh": tanh}


class MissingGradientError(RuntimeError):
    """An optimizer step found a parameter without a gradient."""


def xavier_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class LinearLayer:
    """Affine map ``x @ W.T + b`` with an optional pointwise activation."""

    def __init__(self, weight: Tensor, bias: Tensor, activation: str | None = None):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if weight.data.ndim != 2 or bias.data.ndim != 1 or weight.shape[0] != bias.shape[0]:
            raise ValueError(f"linear layer shapes do not align: {weight.shape}, {bias.shape}")
        self.weight = weight
        self.bias = bias
        self.activation = activation

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        y = add_bias(matmul(x, transpose(self.weight)), self.bias)
        return _ACTIVATIONS[self.activation](y)

    def named(self, prefix: str) -> dict:
        return {f"{prefix}.w": self.weight, f"{prefix}.b": self.bias}


class MlpStack:
    """A sequence of LinearLayers applied in order."""

    def __init__(self, layers: list[LinearLayer]):
        if not layers:
            raise ValueError("MlpStack needs at least one layer")
        self.layers = layers

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x

    def named(self, prefix: str) -> dict:
        out = {}
        for i, layer in enumerate(self.layers):
            out.update(layer.named(f"{prefix}.{i}"))
        return out


class LstmCell:
    """Single LSTM step with weights shared across every agent row.

    Gate layout along the stacked 4h axis is input, forget, cell, output.
    ``step`` maps a batch of inputs [n, in] plus states [n, h] to new states.
    """

    def __init__(self, w_ih: Tensor, w_hh: Tensor, bias: Tensor):
        h4, in_dim = w_ih.shape
        if h4 == 0 or in_dim == 0 or h4 % 4 != 0 or w_hh.shape != (h4, h4 // 4) or bias.shape != (h4,):
            raise ValueError(
                f"lstm shapes do not align: {w_ih.shape}, {w_hh.shape}, {bias.shape}"
            )
        self.w_ih = w_ih
        self.w_hh = w_hh
        self.bias = bias
        self.hidden = h4 // 4
        self.in_dim = in_dim

    def zero_state(self, n: int, dtype) -> tuple[Tensor, Tensor]:
        return zeros((n, self.hidden), dtype=dtype), zeros((n, self.hidden), dtype=dtype)

    def step(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"lstm input width {x.shape[-1]}, expected {self.in_dim}")
        z = add_bias(
            add(matmul(x, transpose(self.w_ih)), matmul(h, transpose(self.w_hh))),
            self.bias,
        )
        hdim = self.hidden
        i = sigmoid(slice_axis(z, 1, 0, hdim))
        f = sigmoid(slice_axis(z, 1, hdim, 2 * hdim))
        g = tanh(slice_axis(z, 1, 2 * hdim, 3 * hdim))
        o = sigmoid(slice_axis(z, 1, 3 * hdim, 4 * hdim))
        c_next = add(mul(f, c), mul(i, g))
        h_next = mul(o, tanh(c_next))
        return h_next, c_next

    def named(self, prefix: str) -> dict:
        return {
            f"{prefix}.w_ih": self.w_ih,
            f"{prefix}.w_hh": self.w_hh,
            f"{prefix}.b": self.bias,
        }


def init_linear(
    rng: np.random.Generator,
    in_dim: int,
    out_dim: int,
    activation: str | None = None,
    dtype=np.float64,
) -> LinearLayer:
    if in_dim < 1 or out_dim < 1:
        raise ValueError(f"linear dims must be positive, got {in_dim} -> {out_dim}")
    w = param(xavier_uniform(rng, (out_dim, in_dim), in_dim, out_dim, dtype))
    b = param(np.zeros(out_dim, dtype=dtype))
    return LinearLayer(w, b, activation)


def init_mlp(
    rng: np.random.Generator,
    dims: list[int],
    final_activation: str | None = None,
    dtype=np.float64,
) -> MlpStack:
    """Build [dims[0] -> ... -> dims[-1]] with relu between hidden layers."""
    if len(dims) < 2:
        raise ValueError("an MLP needs at least input and output dims")
    layers = []
    for i in range(len(dims) - 1):
        act = final_activation if i == len(dims) - 2 else "relu"
        layers.append(init_linear(rng, dims[i], dims[i + 1], act, dtype))
    return MlpStack(layers)


def init_lstm(rng: np.random.Generator, in_dim: int, hidden: int, dtype=np.float64) -> LstmCell:
    w_ih = param(xavier_uniform(rng, (4 * hidden, in_dim), in_dim, 4 * hidden, dtype))
    w_hh = param(xavier_uniform(rng, (4 * hidden, hidden), hidden, 4 * hidden, dtype))
    b = np.zeros(4 * hidden, dtype=dtype)
    b[hidden : 2 * hidden] = 1.0  # forget gate bias
    return LstmCell(w_ih, w_hh, param(b))


class Adam:
    """Adam with bias correction over a flat name -> Tensor parameter map."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                raise MissingGradientError(
                    f"parameter '{name}' has no gradient; run backward before step()"
                )
            g = p.grad
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
