"""Variational autoencoder with learned isotropic observation noise.

Trained by maximizing the Monte Carlo mean evidence lower bound with one
reparameterized sample per datum per step; the variational posterior is
N(mu(a), sigma(a)^2 I) with a scalar log-sigma head, the prior N(0, I).
"""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..nn import AdamW, Mlp, MlpSpec, Tensor
from .base import (GenModelConfig, GenerativeModel, Standardizer, check_finite,
                   minibatches, project_rows, project_rows_np)


class VaeModel(GenerativeModel):
    kind = "vae"

    def __init__(self, config, std, constraint=None, reference=None,
                 constraint_kind="none"):
        super().__init__(config, std, constraint, reference, constraint_kind)
        init = rngmod.stream(config.seed, "vae-init")
        n, k, w, d = config.data_dim, config.latent_dim, config.width, config.depth
        self.decoder = Mlp(MlpSpec(k, n, w, d, config.norm, config.dropout), init)
        self.enc_mu = Mlp(MlpSpec(n, k, w, d, config.norm, config.dropout), init)
        self.enc_logsig = Mlp(MlpSpec(n, 1, w, d, config.norm, config.dropout), init)
        self.log_gamma = Tensor(np.zeros(1), requires_grad=config.learn_gamma)

    # decoded output lives in original data units, constraint applied last
    def _decode_t(self, s: Tensor, train: bool, rng=None) -> Tensor:
        out = self.std.inverse_t(self.decoder(s, train=train, rng=rng))
        return project_rows(out, self.constraint)

    def fit(self, X: np.ndarray) -> "VaeModel":
        cfg = self.config
        X = np.atleast_2d(np.asarray(X, float))
        self.std = Standardizer.fit(X)
        self.log_gamma.data = np.array([np.log(max(X.var(axis=0).mean(), 1e-6))])
        Xs = self.std.transform(X)
        n = cfg.data_dim
        params = (self.decoder.params() + self.enc_mu.params()
                  + self.enc_logsig.params())
        if cfg.learn_gamma:
            params = params + [self.log_gamma]
        opt = AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
        batches = rngmod.stream(cfg.seed, "vae-batches")
        noise = rngmod.stream(cfg.seed, "vae-noise")
        drop = rngmod.stream(cfg.seed, "vae-dropout")
        self.history = {"loss": [], "kl": [], "elbo": []}
        for epoch in range(cfg.epochs):
            tot, tot_kl, count = 0.0, 0.0, 0
            for idx in minibatches(X.shape[0], cfg.batch_size, batches):
                xb = Tensor(X[idx])
                xb_std = Tensor(Xs[idx])
                opt.zero_grad()
                mu = self.enc_mu(xb_std, train=True, rng=drop)
                logsig = self.enc_logsig(xb_std, train=True, rng=drop).clip(-6.0, 6.0)
                sig = logsig.exp()
                eps = Tensor(noise.standard_normal((len(idx), cfg.latent_dim)))
                s = mu + sig * eps
                recon = self._decode_t(s, train=True, rng=drop)
                gamma = self.log_gamma.exp()
                sq = ((xb - recon) ** 2.0).sum(axis=1)
                rec_nll = sq / (2.0 * gamma) + 0.5 * n * (2.0 * np.pi * gamma).log()
                # KL(N(mu, sig^2 I) || N(0, I)) with isotropic sigma
                k = float(cfg.latent_dim)
                kl = 0.5 * ((mu * mu).sum(axis=1) + k * sig.reshape(-1) ** 2.0
                            - k - 2.0 * k * logsig.reshape(-1))
                loss = (rec_nll + kl).mean()
                loss.backward()
                opt.step()
                tot += float(loss.data) * len(idx)
                tot_kl += float(kl.data.mean()) * len(idx)
                count += len(idx)
            check_finite("vae", epoch, tot / count)
            self.history["loss"].append(tot / count)
            self.history["kl"].append(tot_kl / count)
            self.history["elbo"].append(-tot / count)
        self.trained = True
        return self

    def encode(self, X: np.ndarray) -> np.ndarray:
        self._need_trained()
        Xs = self.std.transform(np.atleast_2d(X))
        return self.enc_mu(Tensor(Xs)).data

    def decode(self, S: np.ndarray) -> np.ndarray:
        self._need_trained()
        out = self.std.inverse(self.decoder(Tensor(np.atleast_2d(S))).data)
        return project_rows_np(out, self.constraint)

    def sample_codes(self, count: int, rng) -> np.ndarray:
        return rng.standard_normal((count, self.config.latent_dim))

    # -- persistence --------------------------------------------------------

    def _state_arrays(self) -> dict:
        return {**self.decoder.state_arrays("dec"),
                **self.enc_mu.state_arrays("encmu"),
                **self.enc_logsig.state_arrays("enclogsig"),
                "log_gamma": self.log_gamma.data}

    def _load_arrays(self, arrays: dict) -> None:
        self.decoder.load_state("dec", arrays)
        self.enc_mu.load_state("encmu", arrays)
        self.enc_logsig.load_state("enclogsig", arrays)
        self.log_gamma.data = arrays["log_gamma"].copy()

    @classmethod
    def _from_checkpoint(cls, ckpt) -> "VaeModel":
        config, std, spec, ref, ckind = cls._restore_common(ckpt)
        model = cls(config, std, spec, ref, ckind)
        model._load_arrays(ckpt.arrays)
        model.history = ckpt.specs.get("history", {})
        model.trained = True
        return model
