"""Boundary-equilibrium GAN: a critic autoencoder scores data and generated
samples by reconstruction norm; a scalar control variable k_t holds the two
losses at the configured equilibrium ratio."""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..nn import AdamW, Mlp, MlpSpec, Tensor
from .base import (GenerativeModel, Standardizer, check_finite, minibatches,
                   project_rows, project_rows_np)


class BeganModel(GenerativeModel):
    kind = "began"

    def __init__(self, config, std, constraint=None, reference=None,
                 constraint_kind="none"):
        super().__init__(config, std, constraint, reference, constraint_kind)
        init = rngmod.stream(config.seed, "began-init")
        n, k, w, d = config.data_dim, config.latent_dim, config.width, config.depth
        self.generator = Mlp(MlpSpec(k, n, w, d, config.norm, config.dropout), init)
        self.critic_enc = Mlp(MlpSpec(n, k, w, d, config.norm, config.dropout), init)
        self.critic_dec = Mlp(MlpSpec(k, n, w, d, config.norm, config.dropout), init)
        self.k_t = config.k0

    def _critic_norm(self, x: Tensor, train: bool, rng=None) -> Tensor:
        rec = self.critic_dec(self.critic_enc(x, train=train, rng=rng),
                              train=train, rng=rng)
        return (((x - rec) ** 2.0).sum(axis=1) + 1e-12).sqrt().mean()

    def _generate_t(self, s: Tensor, train: bool, rng=None) -> Tensor:
        out = self.std.inverse_t(self.generator(s, train=train, rng=rng))
        return project_rows(out, self.constraint)

    def fit(self, X: np.ndarray) -> "BeganModel":
        cfg = self.config
        X = np.atleast_2d(np.asarray(X, float))
        self.std = Standardizer.fit(X)
        Xs = self.std.transform(X)
        opt_critic = AdamW(self.critic_enc.params() + self.critic_dec.params(),
                           lr=cfg.lr, weight_decay=cfg.weight_decay)
        opt_gen = AdamW(self.generator.params(), lr=cfg.lr,
                        weight_decay=cfg.weight_decay)
        batches = rngmod.stream(cfg.seed, "began-batches")
        noise = rngmod.stream(cfg.seed, "began-noise")
        drop = rngmod.stream(cfg.seed, "began-dropout")
        self.k_t = cfg.k0
        self.history = {"convergence": [], "l_real": [], "l_fake": [], "k_t": []}
        for epoch in range(cfg.epochs):
            sums = {"convergence": 0.0, "l_real": 0.0, "l_fake": 0.0}
            count = 0
            for idx in minibatches(X.shape[0], cfg.batch_size, batches):
                xb_std = Tensor(Xs[idx])
                B = len(idx)
                s = Tensor(noise.standard_normal((B, cfg.latent_dim)))

                # critic: L(real) - k_t * L(fake), fake detached
                opt_critic.zero_grad()
                fake_std = Tensor(self.std.transform(
                    self._generate_t(s, train=True, rng=drop).data))
                l_real = self._critic_norm(xb_std, train=True, rng=drop)
                l_fake_c = self._critic_norm(fake_std, train=True, rng=drop)
                (l_real - self.k_t * l_fake_c).backward()
                opt_critic.step()

                # generator: minimize L(fake) through the frozen critic
                opt_gen.zero_grad()
                fake2 = self._generate_t(s, train=True, rng=drop)
                fake2_std = (fake2 - Tensor(self.std.mean)) / Tensor(self.std.scale)
                l_fake = self._critic_norm(fake2_std, train=True, rng=drop)
                l_fake.backward()
                opt_gen.step()

                lr_v, lf_v = float(l_real.data), float(l_fake.data)
                self.k_t = float(np.clip(
                    self.k_t + cfg.ctrl_gain * (cfg.gamma_eq * lr_v - lf_v), 0.0, 1.0))
                sums["convergence"] += (lr_v + abs(cfg.gamma_eq * lr_v - lf_v)) * B
                sums["l_real"] += lr_v * B
                sums["l_fake"] += lf_v * B
                count += B
            for key in sums:
                self.history[key].append(check_finite("began", epoch, sums[key] / count))
            self.history["k_t"].append(self.k_t)
        self.trained = True
        return self

    def encode(self, X: np.ndarray) -> np.ndarray:
        self._need_trained()
        return self.critic_enc(Tensor(self.std.transform(np.atleast_2d(X)))).data

    def decode(self, S: np.ndarray) -> np.ndarray:
        self._need_trained()
        out = self.std.inverse(self.generator(Tensor(np.atleast_2d(S))).data)
        return project_rows_np(out, self.constraint)

    def sample_codes(self, count: int, rng) -> np.ndarray:
        return rng.standard_normal((count, self.config.latent_dim))

    def _extra_specs(self) -> dict:
        return {"k_t": self.k_t}

    def _state_arrays(self) -> dict:
        return {**self.generator.state_arrays("gen"),
                **self.critic_enc.state_arrays("cenc"),
                **self.critic_dec.state_arrays("cdec")}

    def _load_arrays(self, arrays: dict) -> None:
        self.generator.load_state("gen", arrays)
        self.critic_enc.load_state("cenc", arrays)
        self.critic_dec.load_state("cdec", arrays)

    @classmethod
    def _from_checkpoint(cls, ckpt) -> "BeganModel":
        config, std, spec, ref, ckind = cls._restore_common(ckpt)
        model = cls(config, std, spec, ref, ckind)
        model._load_arrays(ckpt.arrays)
        model.k_t = ckpt.specs.get("k_t", config.k0)
        model.history = ckpt.specs.get("history", {})
        model.trained = True
        return model
