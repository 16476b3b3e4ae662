"""Adversarial autoencoder: reconstruction plus a latent discriminator
pushing encoded codes toward the N(0, I) prior (base-2 logs throughout)."""

from __future__ import annotations

import numpy as np

from .. import rng as rngmod
from ..nn import AdamW, Mlp, MlpSpec, Tensor
from .base import (GenerativeModel, Standardizer, check_finite, minibatches,
                   project_rows, project_rows_np)

_LOG2 = np.log(2.0)
_CLAMP = 1e-7


class AaeModel(GenerativeModel):
    kind = "aae"

    def __init__(self, config, std, constraint=None, reference=None,
                 constraint_kind="none"):
        super().__init__(config, std, constraint, reference, constraint_kind)
        init = rngmod.stream(config.seed, "aae-init")
        n, k, w, d = config.data_dim, config.latent_dim, config.width, config.depth
        self.encoder = Mlp(MlpSpec(n, k, w, d, config.norm, config.dropout), init)
        self.decoder = Mlp(MlpSpec(k, n, w, d, config.norm, config.dropout), init)
        self.disc = Mlp(MlpSpec(k, 1, max(w // 2, 16), d), init)

    def _decode_t(self, s: Tensor, train: bool, rng=None) -> Tensor:
        out = self.std.inverse_t(self.decoder(s, train=train, rng=rng))
        return project_rows(out, self.constraint)

    def fit(self, X: np.ndarray) -> "AaeModel":
        cfg = self.config
        X = np.atleast_2d(np.asarray(X, float))
        self.std = Standardizer.fit(X)
        Xs = self.std.transform(X)
        opt_rec = AdamW(self.encoder.params() + self.decoder.params(),
                        lr=cfg.lr, weight_decay=cfg.weight_decay)
        opt_disc = AdamW(self.disc.params(), lr=cfg.lr)
        opt_adv = AdamW(self.encoder.params(), lr=cfg.lr)
        batches = rngmod.stream(cfg.seed, "aae-batches")
        noise = rngmod.stream(cfg.seed, "aae-noise")
        drop = rngmod.stream(cfg.seed, "aae-dropout")
        self.history = {"recon": [], "disc": [], "adv": []}
        m = X.shape[0]
        for epoch in range(cfg.epochs):
            sums = {"recon": 0.0, "disc": 0.0, "adv": 0.0}
            count = 0
            for idx in minibatches(m, cfg.batch_size, batches):
                xb = Tensor(X[idx])
                xb_std = Tensor(Xs[idx])
                B = len(idx)

                # reconstruction step over encoder + decoder
                opt_rec.zero_grad()
                code = self.encoder(xb_std, train=True, rng=drop)
                rec = self._decode_t(code, train=True, rng=drop)
                rec_loss = (0.5 * ((xb - rec) ** 2.0).sum(axis=1)).mean()
                rec_loss.backward()
                opt_rec.step()

                # discriminator step: prior codes vs detached encoded codes
                opt_disc.zero_grad()
                prior = Tensor(noise.standard_normal((B, cfg.latent_dim)))
                enc_det = Tensor(self.encoder(xb_std).data)
                g_prior = self.disc(prior, train=True).sigmoid().clip(_CLAMP, 1 - _CLAMP)
                g_enc = self.disc(enc_det, train=True).sigmoid().clip(_CLAMP, 1 - _CLAMP)
                disc_loss = -(g_prior.log().mean()
                              + (1.0 - g_enc).log().mean()) * (1.0 / _LOG2)
                disc_loss.backward()
                opt_disc.step()

                # adversarial step over the encoder (discriminator frozen)
                opt_adv.zero_grad()
                code2 = self.encoder(xb_std, train=True, rng=drop)
                g2 = self.disc(code2).sigmoid().clip(_CLAMP, 1 - _CLAMP)
                adv_loss = (1.0 - g2).log().mean() * (1.0 / _LOG2)
                adv_loss.backward()
                opt_adv.step()

                sums["recon"] += float(rec_loss.data) * B
                sums["disc"] += float(disc_loss.data) * B
                sums["adv"] += float(adv_loss.data) * B
                count += B
            for key in sums:
                self.history[key].append(check_finite("aae", epoch, sums[key] / count))
        self.trained = True
        return self

    def encode(self, X: np.ndarray) -> np.ndarray:
        self._need_trained()
        return self.encoder(Tensor(self.std.transform(np.atleast_2d(X)))).data

    def decode(self, S: np.ndarray) -> np.ndarray:
        self._need_trained()
        out = self.std.inverse(self.decoder(Tensor(np.atleast_2d(S))).data)
        return project_rows_np(out, self.constraint)

    def sample_codes(self, count: int, rng) -> np.ndarray:
        return rng.standard_normal((count, self.config.latent_dim))

    def discriminator_probs(self, codes: np.ndarray) -> np.ndarray:
        out = self.disc(Tensor(np.atleast_2d(codes))).data.ravel()
        return 1.0 / (1.0 + np.exp(-out))

    def _state_arrays(self) -> dict:
        return {**self.encoder.state_arrays("enc"),
                **self.decoder.state_arrays("dec"),
                **self.disc.state_arrays("disc")}

    def _load_arrays(self, arrays: dict) -> None:
        self.encoder.load_state("enc", arrays)
        self.decoder.load_state("dec", arrays)
        self.disc.load_state("disc", arrays)

    @classmethod
    def _from_checkpoint(cls, ckpt) -> "AaeModel":
        config, std, spec, ref, ckind = cls._restore_common(ckpt)
        model = cls(config, std, spec, ref, ckind)
        model._load_arrays(ckpt.arrays)
        model.history = ckpt.specs.get("history", {})
        model.trained = True
        return model
