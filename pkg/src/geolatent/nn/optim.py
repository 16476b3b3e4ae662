"""Adam and AdamW (decoupled weight decay)."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class AdamW:
    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            update = (self.m[i] / bc1) / (np.sqrt(self.v[i] / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data = p.data - self.lr * update

    def state_arrays(self, prefix: str = "opt") -> dict:
        out = {f"{prefix}.t": np.array([float(self.t)])}
        for i in range(len(self.params)):
            out[f"{prefix}.m{i}"] = self.m[i]
            out[f"{prefix}.v{i}"] = self.v[i]
        return out

    def load_state(self, arrays: dict, prefix: str = "opt") -> None:
        self.t = int(arrays[f"{prefix}.t"][0])
        for i in range(len(self.params)):
            self.m[i] = arrays[f"{prefix}.m{i}"].copy()
            self.v[i] = arrays[f"{prefix}.v{i}"].copy()


def adam(params, lr: float = 1e-3, **kw) -> AdamW:
    """Adam is AdamW without decay."""
    return AdamW(params, lr=lr, weight_decay=0.0, **kw)
