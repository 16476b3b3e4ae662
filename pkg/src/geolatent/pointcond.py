"""Conditional point autoencoder.

A point encoder maps (deformed point, matching reference point) pairs to
per-point features; mean pooling over the cloud gives one latent code per
cloud; a conditional decoder maps (code, reference point) back to a
deformed point. Because the decoder is conditioned on reference points, a
code learned at one resolution can deform a finer discretization of the
same reference shape.
"""

from __future__ import annotations

import numpy as np

from . import rng as rngmod
from .geometry import GeometryError, PointCloud, TriMesh
from .genmodels.base import (GenModelConfig, Standardizer, TrainingDiverged,
                             check_finite, minibatches)
from .genmodels.priors import fit_latent_prior
from .nn import AdamW, Checkpoint, Mlp, MlpSpec, Tensor, concat
from .nn import load_checkpoint, save_checkpoint


class CondAutoencoder:
    """Point-pair encoder g: R^3 x R^3 -> R^d and conditional decoder
    f: R^d x R^3 -> R^3 sharing one reference cloud."""

    def __init__(self, reference: PointCloud, latent_dim: int, width: int = 64,
                 depth: int = 2, seed: int = 0, squared_norm: bool = False):
        self.reference = reference
        self.latent_dim = latent_dim
        self.width = width
        self.depth = depth
        self.seed = seed
        self.squared_norm = squared_norm
        init = rngmod.stream(seed, "cond-init")
        self.encoder = Mlp(MlpSpec(6, latent_dim, width, depth), init)
        self.decoder = Mlp(MlpSpec(latent_dim + 3, 3, width, depth), init)
        self.point_std = Standardizer.fit(reference.points)
        self.history: list[float] = []
        self.trained = False

    # -- pieces --------------------------------------------------------------

    def _encode_pairs(self, clouds: np.ndarray, ref_pts: np.ndarray) -> Tensor:
        """Codes for a (B, n) batch of clouds against (n/3, 3) reference points."""
        B = clouds.shape[0]
        P = ref_pts.shape[0]
        deformed = clouds.reshape(B * P, 3)
        ref_tiled = np.tile(ref_pts, (B, 1))
        pairs = np.concatenate([self.point_std.transform(deformed),
                                self.point_std.transform(ref_tiled)], axis=1)
        feats = self.encoder(Tensor(pairs))
        return feats.reshape(B, P, self.latent_dim).mean(axis=1)

    def _decode_codes(self, codes: Tensor, ref_pts: np.ndarray) -> Tensor:
        """Per-point decode of (B, d) codes over (P, 3) reference points."""
        B = codes.shape[0]
        P = ref_pts.shape[0]
        code_rows = codes.repeat_rows(P)
        ref_tiled = Tensor(np.tile(self.point_std.transform(ref_pts), (B, 1)))
        out = self.decoder(concat([code_rows, ref_tiled], axis=1))
        return out.reshape(B, 3 * P)

    def cond_loss(self, clouds: np.ndarray) -> Tensor:
        """Total reconstruction loss of Algorithm 2.2 over a batch of clouds."""
        clouds = np.atleast_2d(np.asarray(clouds, float))
        if clouds.size == 0:
            return Tensor(0.0)
        ref_pts = self.reference.points
        if clouds.shape[1] != 3 * ref_pts.shape[0]:
            raise GeometryError(f"cloud dim {clouds.shape[1]} != reference dim "
                                f"{3 * ref_pts.shape[0]}")
        codes = self._encode_pairs(clouds, ref_pts)
        recon = self._decode_codes(codes, ref_pts)
        sq = ((Tensor(clouds) - recon) ** 2.0).sum(axis=1)
        if self.squared_norm:
            return sq.sum()
        return (sq + 1e-14).sqrt().sum()

    # -- public API -----------------------------------------------------------

    def encode(self, clouds: np.ndarray) -> np.ndarray:
        clouds = np.atleast_2d(np.asarray(clouds, float))
        return self._encode_pairs(clouds, self.reference.points).data

    def decode(self, codes: np.ndarray,
               reference: PointCloud | None = None) -> np.ndarray:
        """Decode codes over the training reference or any finer stand-in."""
        codes = np.atleast_2d(np.asarray(codes, float))
        ref = self.reference if reference is None else reference
        return self._decode_codes(Tensor(codes), ref.points).data

    def save(self, path) -> None:
        specs = {"kind": "cond-ae", "latent_dim": self.latent_dim,
                 "width": self.width, "depth": self.depth, "seed": self.seed,
                 "squared_norm": self.squared_norm, "history": self.history}
        arrays = {"reference": self.reference.coords,
                  "pstd.mean": self.point_std.mean,
                  "pstd.scale": self.point_std.scale,
                  **self.encoder.state_arrays("enc"),
                  **self.decoder.state_arrays("dec")}
        save_checkpoint(path, Checkpoint(specs=specs, arrays=arrays))

    @classmethod
    def load(cls, path) -> "CondAutoencoder":
        ckpt = load_checkpoint(path)
        if ckpt.specs.get("kind") != "cond-ae":
            raise ValueError("not a conditional autoencoder checkpoint")
        model = cls(PointCloud(ckpt.arrays["reference"]),
                    ckpt.specs["latent_dim"], ckpt.specs["width"],
                    ckpt.specs["depth"], ckpt.specs["seed"],
                    ckpt.specs["squared_norm"])
        model.point_std = Standardizer(ckpt.arrays["pstd.mean"],
                                       ckpt.arrays["pstd.scale"])
        model.encoder.load_state("enc", ckpt.arrays)
        model.decoder.load_state("dec", ckpt.arrays)
        model.history = ckpt.specs.get("history", [])
        model.trained = True
        return model


def cond_loss(clouds: np.ndarray, reference: PointCloud,
              model: CondAutoencoder) -> float:
    """Loss of Algorithm 2.2 for clouds co-indexed with the reference."""
    if reference.coords.shape != model.reference.coords.shape or \
            not np.array_equal(reference.coords, model.reference.coords):
        raise GeometryError("reference cloud differs from the model's")
    return float(model.cond_loss(clouds).data)


def fit_cond(clouds: np.ndarray, reference: PointCloud, latent_dim: int,
             epochs: int = 300, batch_size: int = 8, lr: float = 1e-3,
             width: int = 64, depth: int = 2, seed: int = 0,
             weight_decay: float = 0.0, squared_norm: bool = False):
    """Train the conditional autoencoder; returns (model, codes)."""
    clouds = np.atleast_2d(np.asarray(clouds, float))
    model = CondAutoencoder(reference, latent_dim, width, depth, seed,
                            squared_norm)
    opt = AdamW(model.encoder.params() + model.decoder.params(), lr=lr,
                weight_decay=weight_decay)
    batches = rngmod.stream(seed, "cond-batches")
    m = clouds.shape[0]
    for epoch in range(epochs):
        tot = 0.0
        for idx in minibatches(m, batch_size, batches):
            opt.zero_grad()
            loss = model.cond_loss(clouds[idx])
            loss.backward()
            opt.step()
            tot += float(loss.data)
        model.history.append(check_finite("cond-ae", epoch, tot / m))
    model.trained = True
    return model, model.encode(clouds)


def decode_at_resolution(model: CondAutoencoder, code: np.ndarray,
                         fine_reference: TriMesh) -> PointCloud:
    """Decode one code over a finer discretization of the reference shape."""
    out = model.decode(np.atleast_2d(code), fine_reference.cloud)
    return PointCloud(out[0])


def fit_code_prior(codes: np.ndarray, kind: str, config: GenModelConfig):
    """Latent sampler over conditional-AE codes (delegates to the
    generative-model latent priors)."""
    return fit_latent_prior(codes, kind, config)
