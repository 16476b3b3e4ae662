"""Latent priors over autoencoder codes (normalizing flow, energy-based
model with Langevin sampling, denoising diffusion) and the autoencoder +
prior combination exposing the common generative-model contract."""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..nn import AdamW, Mlp, MlpSpec, Tensor
from .base import (GenModelConfig, GenerativeModel, Standardizer, check_finite,
                   minibatches, project_rows, project_rows_np)
from .flows import RealNvpFlow


class LatentPrior:
    """Density/sampler over standardized codes."""

    name = "base"

    def __init__(self, config: GenModelConfig):
        self.config = config
        self.code_std = Standardizer(np.zeros(config.latent_dim),
                                     np.ones(config.latent_dim))
        self.history: list[float] = []
        self._std_fitted = False

    def fit(self, codes: np.ndarray, epochs: int | None = None) -> "LatentPrior":
        """Train on raw codes; repeated calls continue training (the code
        standardizer is frozen at the first call)."""
        codes = np.atleast_2d(codes)
        if not self._std_fitted:
            self.code_std = Standardizer.fit(codes)
            self._std_fitted = True
        self._fit_std(self.code_std.transform(codes),
                      self.config.epochs if epochs is None else epochs)
        return self

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.code_std.inverse(self._sample_std(count, rng))

    def _fit_std(self, z: np.ndarray, epochs: int) -> None:
        raise NotImplementedError

    def _sample_std(self, count: int, rng) -> np.ndarray:
        raise NotImplementedError

    def state_arrays(self, prefix: str) -> dict:
        return {f"{prefix}.code_mean": self.code_std.mean,
                f"{prefix}.code_scale": self.code_std.scale,
                **self._prior_arrays(prefix)}

    def load_state(self, prefix: str, arrays: dict) -> None:
        self.code_std = Standardizer(arrays[f"{prefix}.code_mean"],
                                     arrays[f"{prefix}.code_scale"])
        self._load_prior(prefix, arrays)


class NfPrior(LatentPrior):
    """Exact max-likelihood coupling flow over the codes."""

    name = "nf"

    def __init__(self, config):
        super().__init__(config)
        init = rngmod.stream(config.seed, "nf-init")
        self.flow = RealNvpFlow(config.latent_dim, config.n_couplings,
                                config.flow_width, init)

    def _fit_std(self, z: np.ndarray, epochs: int) -> None:
        cfg = self.config
        if not hasattr(self, "_opt"):
            self._opt = AdamW(self.flow.params(), lr=cfg.lr,
                              weight_decay=cfg.weight_decay)
            self._batches = rngmod.stream(cfg.seed, "nf-batches")
        opt, batches = self._opt, self._batches
        for epoch in range(epochs):
            tot, count = 0.0, 0
            for idx in minibatches(z.shape[0], cfg.batch_size, batches):
                opt.zero_grad()
                nll = -self.flow.log_prob(Tensor(z[idx])).mean()
                nll.backward()
                opt.step()
                tot += float(nll.data) * len(idx)
                count += len(idx)
            self.history.append(check_finite("nf", epoch, tot / count))

    def _sample_std(self, count, rng):
        return self.flow.sample(count, rng)

    def mean_nll(self, codes: np.ndarray) -> float:
        z = self.code_std.transform(np.atleast_2d(codes))
        # report in original code units: subtract the log| d std / d code |
        log_jac = -np.log(self.code_std.scale).sum()
        return float(-self.flow.log_prob(Tensor(z)).data.mean() - log_jac)

    def _prior_arrays(self, prefix):
        return self.flow.state_arrays(f"{prefix}.flow")

    def _load_prior(self, prefix, arrays):
        self.flow.load_state(f"{prefix}.flow", arrays)


class EbmPrior(LatentPrior):
    """Energy net trained by contrastive divergence; samples come from a
    Langevin chain s <- s - eps^2/2 grad E(s) + eps xi."""

    name = "ebm"

    def __init__(self, config):
        super().__init__(config)
        init = rngmod.stream(config.seed, "ebm-init")
        self.net = Mlp(MlpSpec(config.latent_dim, 1, config.width, config.depth,
                               config.norm, config.dropout), init)

    def energy(self, z: np.ndarray) -> np.ndarray:
        return self.net(Tensor(np.atleast_2d(z))).data.ravel()

    def _energy_grad(self, z: np.ndarray) -> np.ndarray:
        leaf = Tensor(z, requires_grad=True)
        self.net(leaf).sum().backward()
        return leaf.grad

    def langevin(self, z0: np.ndarray, steps: int, eps: float,
                 rng: np.random.Generator) -> np.ndarray:
        z = np.array(z0, float)
        for _ in range(steps):
            z = (z - 0.5 * eps * eps * self._energy_grad(z)
                 + eps * rng.standard_normal(z.shape))
        return z

    def _fit_std(self, z: np.ndarray, epochs: int) -> None:
        cfg = self.config
        if not hasattr(self, "_opt"):
            self._opt = AdamW(self.net.params(), lr=cfg.lr,
                              weight_decay=cfg.weight_decay)
            self._batches = rngmod.stream(cfg.seed, "ebm-batches")
            self._chain_rng = rngmod.stream(cfg.seed, "ebm-langevin")
        opt, batches, chain_rng = self._opt, self._batches, self._chain_rng
        for epoch in range(epochs):
            tot, count = 0.0, 0
            for idx in minibatches(z.shape[0], cfg.batch_size, batches):
                pos = z[idx]
                neg = self.langevin(pos, cfg.langevin_steps, cfg.langevin_eps,
                                    chain_rng)
                opt.zero_grad()
                e_pos = self.net(Tensor(pos), train=True).mean()
                e_neg = self.net(Tensor(neg), train=True).mean()
                loss = (e_pos - e_neg
                        + cfg.ebm_reg * (e_pos * e_pos + e_neg * e_neg))
                loss.backward()
                opt.step()
                tot += float((e_pos - e_neg).data) * len(idx)
                count += len(idx)
            self.history.append(check_finite("ebm", epoch, tot / count))

    def _sample_std(self, count, rng):
        z0 = rng.standard_normal((count, self.config.latent_dim))
        return self.langevin(z0, self.config.ebm_sample_steps,
                             self.config.langevin_eps, rng)

    def _prior_arrays(self, prefix):
        return self.net.state_arrays(f"{prefix}.net")

    def _load_prior(self, prefix, arrays):
        self.net.load_state(f"{prefix}.net", arrays)


class DdpmPrior(LatentPrior):
    """Noise-prediction net over a linear variance schedule with the
    schedule-derived loss weights; ancestral reverse sampling."""

    name = "ddpm"

    def __init__(self, config):
        super().__init__(config)
        init = rngmod.stream(config.seed, "ddpm-init")
        k = config.latent_dim
        self.net = Mlp(MlpSpec(k + 3, k, config.width, config.depth,
                               config.norm, config.dropout), init)
        T = config.ddpm_steps
        self.xi = np.linspace(config.xi_min, config.xi_max, T)
        self.eta = 1.0 - self.xi
        self.eta_bar = np.cumprod(self.eta)
        self.kappa = self.xi / (2.0 * self.eta * (1.0 - self.eta_bar))

    def _time_features(self, t: np.ndarray) -> np.ndarray:
        # t in 1..T
        frac = t / self.config.ddpm_steps
        return np.stack([frac, np.sin(2 * np.pi * frac),
                         np.cos(2 * np.pi * frac)], axis=1)

    def _predict(self, z_t: np.ndarray, t: np.ndarray, train=False, rng=None) -> Tensor:
        inp = np.concatenate([z_t, self._time_features(t)], axis=1)
        return self.net(Tensor(inp), train=train, rng=rng)

    def _fit_std(self, z: np.ndarray, epochs: int) -> None:
        cfg = self.config
        T = cfg.ddpm_steps
        if not hasattr(self, "_opt"):
            self._opt = AdamW(self.net.params(), lr=cfg.lr,
                              weight_decay=cfg.weight_decay)
            self._batches = rngmod.stream(cfg.seed, "ddpm-batches")
            self._noise = rngmod.stream(cfg.seed, "ddpm-noise")
        opt, batches, noise = self._opt, self._batches, self._noise
        for epoch in range(epochs):
            tot, count = 0.0, 0
            for idx in minibatches(z.shape[0], cfg.batch_size, batches):
                z0 = z[idx]
                t = noise.integers(1, T + 1, size=len(idx))
                eps = noise.standard_normal(z0.shape)
                ab = self.eta_bar[t - 1][:, None]
                z_t = np.sqrt(ab) * z0 + np.sqrt(1.0 - ab) * eps
                opt.zero_grad()
                pred = self._predict(z_t, t, train=True)
                w = Tensor(self.kappa[t - 1])
                loss = (w * ((pred - Tensor(eps)) ** 2.0).sum(axis=1)).mean()
                loss.backward()
                opt.step()
                tot += float(loss.data) * len(idx)
                count += len(idx)
            self.history.append(check_finite("ddpm", epoch, tot / count))

    def forward_marginal(self, z0: np.ndarray, t: int,
                         rng: np.random.Generator) -> np.ndarray:
        """Closed-form forward noising at step t (1-based)."""
        ab = self.eta_bar[t - 1]
        return (np.sqrt(ab) * z0
                + np.sqrt(1.0 - ab) * rng.standard_normal(z0.shape))

    def _sample_std(self, count, rng):
        cfg = self.config
        T = cfg.ddpm_steps
        z = rng.standard_normal((count, cfg.latent_dim))
        for t in range(T, 0, -1):
            pred = self._predict(z, np.full(count, t)).data
            eta_t = self.eta[t - 1]
            mean = (z - self.xi[t - 1] / np.sqrt(1.0 - self.eta_bar[t - 1]) * pred) \
                / np.sqrt(eta_t)
            if t > 1:
                z = mean + np.sqrt(self.xi[t - 1]) * rng.standard_normal(z.shape)
            else:
                z = mean
        return z

    def _prior_arrays(self, prefix):
        return self.net.state_arrays(f"{prefix}.net")

    def _load_prior(self, prefix, arrays):
        self.net.load_state(f"{prefix}.net", arrays)


_PRIOR_CLASSES = {"nf": NfPrior, "ebm": EbmPrior, "ddpm": DdpmPrior}


def fit_latent_prior(codes: np.ndarray, kind: str,
                     config: GenModelConfig) -> LatentPrior:
    """Train a latent prior of the given kind on raw codes."""
    if kind not in _PRIOR_CLASSES:
        raise ValueError(f"latent prior kind must be one of {tuple(_PRIOR_CLASSES)}")
    return _PRIOR_CLASSES[kind](config).fit(codes)


class AePriorModel(GenerativeModel):
    """Deterministic autoencoder with an NF/EBM/DDPM prior over its codes."""

    def __init__(self, config, std, constraint=None, reference=None,
                 constraint_kind="none"):
        super().__init__(config, std, constraint, reference, constraint_kind)
        self.kind = config.kind
        init = rngmod.stream(config.seed, "ae-init")
        n, k, w, d = config.data_dim, config.latent_dim, config.width, config.depth
        self.encoder = Mlp(MlpSpec(n, k, w, d, config.norm, config.dropout), init)
        self.decoder = Mlp(MlpSpec(k, n, w, d, config.norm, config.dropout), init)
        self.prior = _PRIOR_CLASSES[config.kind](config)

    def _decode_t(self, s: Tensor, train: bool, rng=None) -> Tensor:
        out = self.std.inverse_t(self.decoder(s, train=train, rng=rng))
        return project_rows(out, self.constraint)

    def _ae_epoch(self, X, Xs, opt, batches, drop) -> float:
        tot, count = 0.0, 0
        for idx in minibatches(X.shape[0], self.config.batch_size, batches):
            xb, xb_std = Tensor(X[idx]), Tensor(Xs[idx])
            opt.zero_grad()
            rec = self._decode_t(self.encoder(xb_std, train=True, rng=drop),
                                 train=True, rng=drop)
            loss = (((xb - rec) ** 2.0).sum(axis=1)).mean()
            loss.backward()
            opt.step()
            tot += float(loss.data) * len(idx)
            count += len(idx)
        return tot / count

    def fit(self, X: np.ndarray) -> "AePriorModel":
        cfg = self.config
        X = np.atleast_2d(np.asarray(X, float))
        self.std = Standardizer.fit(X)
        Xs = self.std.transform(X)
        opt = AdamW(self.encoder.params() + self.decoder.params(),
                    lr=cfg.lr, weight_decay=cfg.weight_decay)
        batches = rngmod.stream(cfg.seed, "ae-batches")
        drop = rngmod.stream(cfg.seed, "ae-dropout")
        self.history = {"recon": []}
        for epoch in range(cfg.epochs):
            self.history["recon"].append(
                check_finite(self.kind, epoch, self._ae_epoch(X, Xs, opt, batches, drop)))
            if cfg.joint_prior_training:
                self.trained = True
                self.prior.fit(self.encode(X), epochs=1)
        self.trained = True
        if not cfg.joint_prior_training:
            self.prior.fit(self.encode(X))
        self.history["prior"] = list(self.prior.history)
        return self

    def encode(self, X: np.ndarray) -> np.ndarray:
        self._need_trained()
        return self.encoder(Tensor(self.std.transform(np.atleast_2d(X)))).data

    def decode(self, S: np.ndarray) -> np.ndarray:
        self._need_trained()
        out = self.std.inverse(self.decoder(Tensor(np.atleast_2d(S))).data)
        return project_rows_np(out, self.constraint)

    def sample_codes(self, count: int, rng) -> np.ndarray:
        return self.prior.sample(count, rng)

    def _state_arrays(self) -> dict:
        return {**self.encoder.state_arrays("enc"),
                **self.decoder.state_arrays("dec"),
                **self.prior.state_arrays("prior")}

    def _load_arrays(self, arrays: dict) -> None:
        self.encoder.load_state("enc", arrays)
        self.decoder.load_state("dec", arrays)
        self.prior.load_state("prior", arrays)

    @classmethod
    def _from_checkpoint(cls, ckpt) -> "AePriorModel":
        config, std, spec, ref, ckind = cls._restore_common(ckpt)
        model = cls(config, std, spec, ref, ckind)
        model._load_arrays(ckpt.arrays)
        model.history = ckpt.specs.get("history", {})
        model.trained = True
        return model
