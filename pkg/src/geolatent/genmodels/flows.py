"""Real-valued non-volume-preserving flow: affine coupling layers with
alternating masks and exact log-determinants."""

from __future__ import annotations

import numpy as np

from ..nn import Mlp, MlpSpec, Tensor


class AffineCoupling:
    """y = x on the masked part; elsewhere y = x * exp(s) + t with (s, t)
    functions of the masked part, so the inverse is closed-form."""

    S_CAP = 2.0

    def __init__(self, dim: int, mask: np.ndarray, width: int,
                 rng: np.random.Generator):
        self.mask = np.asarray(mask, float)
        self.s_net = Mlp(MlpSpec(dim, dim, width, 2), rng)
        self.t_net = Mlp(MlpSpec(dim, dim, width, 2), rng)

    def _st(self, masked: Tensor):
        keep = Tensor(self.mask)
        move = Tensor(1.0 - self.mask)
        s = self.s_net(masked).tanh() * self.S_CAP * move
        t = self.t_net(masked) * move
        return keep, move, s, t

    def forward(self, z: Tensor):
        keep, move, s, t = self._st(z * Tensor(self.mask))
        x = z * keep + (z * s.exp() + t) * move
        return x, s.sum(axis=1)

    def inverse(self, x: Tensor):
        keep, move, s, t = self._st(x * Tensor(self.mask))
        z = x * keep + ((x - t) * (-s).exp()) * move
        return z, -s.sum(axis=1)

    def params(self):
        return self.s_net.params() + self.t_net.params()


class RealNvpFlow:
    def __init__(self, dim: int, n_layers: int, width: int,
                 rng: np.random.Generator):
        self.dim = dim
        self.layers = []
        for i in range(n_layers):
            mask = ((np.arange(dim) + i) % 2).astype(float)
            self.layers.append(AffineCoupling(dim, mask, width, rng))

    def forward(self, z: Tensor):
        """Base-to-data direction, with total forward log-det."""
        logdet = Tensor(np.zeros(z.shape[0]))
        x = z
        for layer in self.layers:
            x, ld = layer.forward(x)
            logdet = logdet + ld
        return x, logdet

    def inverse(self, x: Tensor):
        logdet = Tensor(np.zeros(x.shape[0]))
        z = x
        for layer in reversed(self.layers):
            z, ld = layer.inverse(z)
            logdet = logdet + ld
        return z, logdet

    def log_prob(self, x: Tensor) -> Tensor:
        z, logdet_inv = self.inverse(x)
        log_base = -0.5 * (z * z).sum(axis=1) - 0.5 * self.dim * np.log(2.0 * np.pi)
        return log_base + logdet_inv

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        z = Tensor(rng.standard_normal((count, self.dim)))
        x, _ = self.forward(z)
        return x.data

    def params(self):
        out = []
        for layer in self.layers:
            out += layer.params()
        return out

    def state_arrays(self, prefix: str) -> dict:
        out = {}
        for i, layer in enumerate(self.layers):
            out.update(layer.s_net.state_arrays(f"{prefix}.l{i}.s"))
            out.update(layer.t_net.state_arrays(f"{prefix}.l{i}.t"))
        return out

    def load_state(self, prefix: str, arrays: dict) -> None:
        for i, layer in enumerate(self.layers):
            layer.s_net.load_state(f"{prefix}.l{i}.s", arrays)
            layer.t_net.load_state(f"{prefix}.l{i}.t", arrays)
