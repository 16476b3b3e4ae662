"""Divergence estimators: closed-form Gaussian KL, Monte Carlo ELBO,
discriminator-based JS lower bound, and Wasserstein-1 bounds.

The JS bound follows the base-2 convention throughout, so a constant-1/2
discriminator scores exactly 0 and a perfect one approaches 1. Divided by
two, the bound sits below the Jensen-Shannon divergence computed with
base-2 logs and halved, for any discriminator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .nn import AdamW, Mlp, MlpSpec, Tensor

_LOG2 = np.log(2.0)
_CLAMP = 1e-7


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    provenance: str = "data"   # data | model

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        if p.shape[0] < 1:
            raise ValueError("empty sample set")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite sample")
        object.__setattr__(self, "points", p)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _points(s) -> np.ndarray:
    if isinstance(s, SampleSet):
        return s.points
    return SampleSet(s).points


def gaussian_kl(mu1, var1, mu2, var2) -> float:
    """KL(N(mu1, diag var1) || N(mu2, diag var2)), natural log."""
    mu1, var1 = np.atleast_1d(np.asarray(mu1, float)), np.atleast_1d(np.asarray(var1, float))
    mu2, var2 = np.atleast_1d(np.asarray(mu2, float)), np.atleast_1d(np.asarray(var2, float))
    if np.any(var1 <= 0) or np.any(var2 <= 0):
        raise ValueError("variances must be positive")
    return float(0.5 * np.sum(np.log(var2 / var1) + (var1 + (mu1 - mu2) ** 2) / var2 - 1.0))


def elbo(a, decoder, gamma: float, var_dist, prior, n_mc: int,
         rng: np.random.Generator) -> float:
    """Monte Carlo evidence lower bound for one data point.

    decoder maps an (n_mc, k) code batch to (n_mc, n) means of the isotropic
    Gaussian observation model with variance gamma; var_dist and prior are
    (mean, variance) pairs of diagonal Gaussians over the code space.
    """
    a = np.atleast_1d(np.asarray(a, float))
    mu, var = (np.atleast_1d(np.asarray(v, float)) for v in var_dist)
    pmu, pvar = (np.atleast_1d(np.asarray(v, float)) for v in prior)
    k = mu.size
    n = a.size
    eps = rng.standard_normal((n_mc, k))
    s = mu + np.sqrt(var) * eps
    centers = np.atleast_2d(decoder(s))
    sq = ((a - centers) ** 2).sum(axis=1)
    rec = -0.5 * n * np.log(2.0 * np.pi * gamma) - sq / (2.0 * gamma)
    return float(rec.mean() - gaussian_kl(mu, var, pmu, pvar))


def melbo(samples, decoder, gamma: float, encode_fn, prior, n_mc: int,
          rng: np.random.Generator, log_density=None) -> float:
    """Mean ELBO over a sample set; adds the data-entropy term when a
    density oracle is available (toy diagnostics only)."""
    pts = _points(samples)
    total = 0.0
    for a in pts:
        total += elbo(a, decoder, gamma, encode_fn(a), prior, n_mc, rng)
        if log_density is not None:
            total -= log_density(a)
    return total / pts.shape[0]


def js_lower_bound(real_samples, fake_samples, discriminator,
                   return_se: bool = False):
    """Discriminator-based Monte Carlo lower bound on the JS divergence.

    Returns (2*log2(2) + E_P1[log2 g] + E_P2[log2 (1-g)]) / 2 with
    discriminator outputs clamped away from {0, 1}.
    """
    p1, p2 = _points(real_samples), _points(fake_samples)
    g1 = np.clip(np.asarray(discriminator(p1), float).ravel(), _CLAMP, 1 - _CLAMP)
    g2 = np.clip(np.asarray(discriminator(p2), float).ravel(), _CLAMP, 1 - _CLAMP)
    t1 = np.log2(g1)
    t2 = np.log2(1.0 - g2)
    value = (2.0 + t1.mean() + t2.mean()) / 2.0
    if not return_se:
        return float(value)
    se = 0.5 * np.sqrt(t1.var(ddof=1) / t1.size + t2.var(ddof=1) / t2.size)
    return float(value), float(se)


def w1_lower_bound(s1, s2) -> float:
    """Mean-difference lower bound on the Wasserstein-1 distance."""
    p1, p2 = _points(s1), _points(s2)
    if p1.shape[1] != p2.shape[1]:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(p1.mean(axis=0) - p2.mean(axis=0)))


def w1_exact_1d(s1, s2) -> float:
    """Exact W1 between equal-size 1-D empirical distributions."""
    p1, p2 = _points(s1), _points(s2)
    if p1.shape[1] != 1 or p2.shape[1] != 1:
        raise ValueError("w1_exact_1d needs 1-D samples")
    if p1.shape[0] != p2.shape[0]:
        raise ValueError("w1_exact_1d needs equal sample counts")
    return float(np.abs(np.sort(p1.ravel()) - np.sort(p2.ravel())).mean())


class MlpDiscriminator:
    """Sigmoid-head classifier usable with js_lower_bound."""

    def __init__(self, dim: int, width: int = 32, depth: int = 2, seed: int = 0):
        self.net = Mlp(MlpSpec(dim, 1, width=width, depth=depth),
                       rngmod.stream(seed, "discriminator-init"))

    def logits(self, x: Tensor) -> Tensor:
        return self.net(x, train=True)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        out = self.net(Tensor(np.atleast_2d(pts)))
        return 1.0 / (1.0 + np.exp(-out.data.ravel()))


def fit_discriminator(s1, s2, width: int = 32, depth: int = 2,
                      steps: int = 400, lr: float = 1e-2,
                      seed: int = 0) -> MlpDiscriminator:
    """Train a discriminator to maximize the JS lower bound on two sample sets."""
    p1, p2 = _points(s1), _points(s2)
    disc = MlpDiscriminator(p1.shape[1], width=width, depth=depth, seed=seed)
    opt = AdamW(disc.net.params(), lr=lr)
    t1, t2 = Tensor(p1), Tensor(p2)
    for _ in range(steps):
        opt.zero_grad()
        g1 = disc.logits(t1).sigmoid().clip(_CLAMP, 1 - _CLAMP)
        g2 = disc.logits(t2).sigmoid().clip(_CLAMP, 1 - _CLAMP)
        # negative of the bound, base-2 logs
        loss = -(g1.log().mean() + (1.0 - g2).log().mean()) * (1.0 / _LOG2)
        loss.backward()
        opt.step()
    return disc
