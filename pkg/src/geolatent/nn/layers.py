"""Dense ReLU networks with optional batch/layer norm and dropout.

An Mlp with depth L applies L hidden affine maps interleaved with ReLU
(plus the configured norm and dropout), then one final affine map; depth 0
is a single affine map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, parameter


@dataclass(frozen=True)
class MlpSpec:
    in_dim: int
    out_dim: int
    width: int = 64
    depth: int = 2
    norm: str = "none"      # none | batch | layer
    dropout: float = 0.0

    def __post_init__(self):
        if self.norm not in ("none", "batch", "layer"):
            raise ValueError(f"unknown norm mode {self.norm!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout rate {self.dropout} outside [0, 1)")

    def to_json(self) -> dict:
        return {"in_dim": self.in_dim, "out_dim": self.out_dim,
                "width": self.width, "depth": self.depth,
                "norm": self.norm, "dropout": self.dropout}

    @classmethod
    def from_json(cls, d: dict) -> "MlpSpec":
        return cls(**d)


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 gain: float = 2.0):
        self.W = parameter((in_dim, out_dim), rng, np.sqrt(gain / in_dim))
        self.b = parameter(np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.W + self.b

    def params(self):
        return [self.W, self.b]


class BatchNorm:
    """Normalize over the batch axis; eval mode uses running statistics."""

    def __init__(self, dim: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = parameter(np.ones(dim))
        self.beta = parameter(np.zeros(dim))
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, train: bool) -> Tensor:
        if train:
            mu = x.mean(axis=0, keepdims=True)
            xc = x - mu
            var = (xc * xc).mean(axis=0, keepdims=True)
            self.running_mean += self.momentum * (mu.data.ravel() - self.running_mean)
            self.running_var += self.momentum * (var.data.ravel() - self.running_var)
            return self.gamma * (xc / (var + self.eps).sqrt()) + self.beta
        xc = x - self.running_mean
        return self.gamma * (xc / np.sqrt(self.running_var + self.eps)) + self.beta

    def params(self):
        return [self.gamma, self.beta]


class LayerNorm:
    """Normalize along the feature axis, per sample."""

    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = parameter(np.ones(dim))
        self.beta = parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor, train: bool) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        return self.gamma * (xc / (var + self.eps).sqrt()) + self.beta

    def params(self):
        return [self.gamma, self.beta]


def dropout(x: Tensor, rate: float, train: bool,
            rng: np.random.Generator | None) -> Tensor:
    if not train or rate == 0.0:
        return x
    keep = (rng.uniform(size=x.shape) >= rate) / (1.0 - rate)
    return x * Tensor(keep)


class Mlp:
    def __init__(self, spec: MlpSpec, rng: np.random.Generator):
        self.spec = spec
        self.hidden = []
        self.norms = []
        d = spec.in_dim
        for _ in range(spec.depth):
            self.hidden.append(Dense(d, spec.width, rng))
            if spec.norm == "batch":
                self.norms.append(BatchNorm(spec.width))
            elif spec.norm == "layer":
                self.norms.append(LayerNorm(spec.width))
            else:
                self.norms.append(None)
            d = spec.width
        self.out = Dense(d, spec.out_dim, rng, gain=1.0)

    def __call__(self, x: Tensor, train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        if x.shape[-1] != self.spec.in_dim:
            raise ValueError(f"input dim {x.shape[-1]} != spec in_dim {self.spec.in_dim}")
        for lin, norm in zip(self.hidden, self.norms):
            x = lin(x)
            if norm is not None:
                x = norm(x, train)
            x = x.relu()
            x = dropout(x, self.spec.dropout, train, rng)
        return self.out(x)

    def params(self):
        out = []
        for lin, norm in zip(self.hidden, self.norms):
            out += lin.params()
            if norm is not None:
                out += norm.params()
        return out + self.out.params()

    # checkpointable state: trainable params plus batch-norm running stats
    def state_arrays(self, prefix: str) -> dict:
        out = {}
        for i, (lin, norm) in enumerate(zip(self.hidden, self.norms)):
            out[f"{prefix}.h{i}.W"] = lin.W.data
            out[f"{prefix}.h{i}.b"] = lin.b.data
            if isinstance(norm, (BatchNorm, LayerNorm)):
                out[f"{prefix}.h{i}.gamma"] = norm.gamma.data
                out[f"{prefix}.h{i}.beta"] = norm.beta.data
            if isinstance(norm, BatchNorm):
                out[f"{prefix}.h{i}.rmean"] = norm.running_mean
                out[f"{prefix}.h{i}.rvar"] = norm.running_var
        out[f"{prefix}.out.W"] = self.out.W.data
        out[f"{prefix}.out.b"] = self.out.b.data
        return out

    def load_state(self, prefix: str, arrays: dict) -> None:
        for i, (lin, norm) in enumerate(zip(self.hidden, self.norms)):
            lin.W.data = arrays[f"{prefix}.h{i}.W"].copy()
            lin.b.data = arrays[f"{prefix}.h{i}.b"].copy()
            if isinstance(norm, (BatchNorm, LayerNorm)):
                norm.gamma.data = arrays[f"{prefix}.h{i}.gamma"].copy()
                norm.beta.data = arrays[f"{prefix}.h{i}.beta"].copy()
            if isinstance(norm, BatchNorm):
                norm.running_mean = arrays[f"{prefix}.h{i}.rmean"].copy()
                norm.running_var = arrays[f"{prefix}.h{i}.rvar"].copy()
        self.out.W.data = arrays[f"{prefix}.out.W"].copy()
        self.out.b.data = arrays[f"{prefix}.out.b"].copy()
