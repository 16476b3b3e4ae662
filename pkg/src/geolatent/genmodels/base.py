"""Shared machinery for the generative models: config, standardization,
the constraint projection as a differentiable final decoder layer, and
checkpoint plumbing."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .. import rng as rngmod
from ..constraint import ConstraintSpec, project_pullback, project_with_grad_data
from ..geometry import PointCloud, TriMesh, barycenter_functional, volume_functional
from ..nn import Checkpoint, Tensor, load_checkpoint, save_checkpoint
from ..nn import tensor as _tensor

KINDS = ("vae", "aae", "began", "nf", "ebm", "ddpm")


class TrainingDiverged(RuntimeError):
    def __init__(self, kind: str, epoch: int, value: float):
        super().__init__(f"{kind} training diverged at epoch {epoch}: loss={value}")
        self.epoch = epoch
        self.value = value


@dataclass
class GenModelConfig:
    kind: str
    latent_dim: int
    data_dim: int
    width: int = 64
    depth: int = 2
    norm: str = "none"
    dropout: float = 0.0
    epochs: int = 500
    batch_size: int = 16
    lr: float = 1e-3
    weight_decay: float = 0.0
    seed: int = 0
    # VAE
    learn_gamma: bool = True
    # BEGAN feedback control
    gamma_eq: float = 1.5
    ctrl_gain: float = 1e-3
    k0: float = 0.0
    # NF
    n_couplings: int = 5
    flow_width: int = 32
    # EBM
    langevin_steps: int = 40
    langevin_eps: float = 0.1
    ebm_sample_steps: int = 300
    ebm_reg: float = 1e-3
    # DDPM
    ddpm_steps: int = 200
    xi_min: float = 1e-4
    xi_max: float = 0.08
    # latent-prior kinds: train prior alongside the autoencoder or after it
    joint_prior_training: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {KINDS}")
        if not self.latent_dim < self.data_dim:
            raise ValueError(f"latent_dim {self.latent_dim} must be < data_dim {self.data_dim}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "GenModelConfig":
        return cls(**d)


def preset_config(kind: str, latent_dim: int, data_dim: int,
                  preset: str = "desk", **overrides) -> GenModelConfig:
    """Named network sizes: 'desk' (2x64) or 'paper-appendix' (6x500 with
    batch norm + dropout; 4x100 layer-norm autoencoders for the latent-prior
    kinds)."""
    base = dict(kind=kind, latent_dim=latent_dim, data_dim=data_dim)
    if preset == "desk":
        base.update(width=64, depth=2, norm="none", dropout=0.0)
    elif preset == "paper-appendix":
        if kind in ("vae", "aae", "began"):
            base.update(width=500, depth=6, norm="batch", dropout=0.1,
                        weight_decay=1e-2)
        else:
            base.update(width=100, depth=4, norm="layer", weight_decay=1e-2)
    else:
        raise ValueError(f"unknown preset {preset!r}")
    base.update(overrides)
    return GenModelConfig(**base)


class Standardizer:
    """Per-coordinate zero-mean unit-variance transform over a dataset."""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = np.asarray(mean, float)
        self.scale = np.asarray(scale, float)

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.atleast_2d(X)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.maximum(std, 1e-8))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.scale + self.mean

    def inverse_t(self, z: Tensor) -> Tensor:
        return z * Tensor(self.scale) + Tensor(self.mean)


def project_rows_np(X: np.ndarray, spec: ConstraintSpec | None) -> np.ndarray:
    """Constraint projection applied per row (no gradient tracking)."""
    if spec is None:
        return X
    from ..constraint import project_constraint
    X = np.atleast_2d(X)
    out = np.empty_like(X)
    for i in range(X.shape[0]):
        out[i] = project_constraint(PointCloud(X[i]), spec).coords
    return out


def project_rows(t: Tensor, spec: ConstraintSpec | None) -> Tensor:
    """Differentiable per-row projection; backward uses the local-linear
    pullback with the multilinear structure matrices frozen."""
    if spec is None:
        return t
    rows = np.atleast_2d(t.data)
    outs = np.empty_like(rows)
    datas = []
    for i in range(rows.shape[0]):
        pc, data = project_with_grad_data(PointCloud(rows[i]), spec)
        outs[i] = pc.coords
        datas.append(data)
    out = Tensor(outs.reshape(t.data.shape))
    if t.requires_grad or t._parents:
        out._parents = (t,)
        out.requires_grad = True

        def bwd(g):
            g2 = np.atleast_2d(g)
            gi = np.empty_like(g2)
            for i in range(g2.shape[0]):
                gi[i] = project_pullback(g2[i], datas[i])
            _tensor._send(t, gi.reshape(t.data.shape))
        out._backward = bwd
    return out


def minibatches(m: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(m)
    for lo in range(0, m, batch_size):
        yield perm[lo:lo + batch_size]


def check_finite(kind: str, epoch: int, value: float) -> float:
    if not np.isfinite(value):
        raise TrainingDiverged(kind, epoch, value)
    return value


# --------------------------------------------------------------------------
# constraint <-> checkpoint plumbing

def constraint_to_arrays(spec: ConstraintSpec | None, reference: TriMesh | None,
                         kind: str) -> tuple[dict, dict]:
    specs = {"constraint_kind": kind if spec is not None else "none"}
    arrays = {}
    if spec is not None:
        if reference is None:
            raise ValueError("constraint projection needs the reference mesh")
        arrays["constraint.target"] = spec.target
        arrays["ref.coords"] = reference.cloud.coords
        arrays["ref.triangles"] = reference.triangles.astype(np.float64)
    return specs, arrays


def constraint_from_arrays(specs: dict, arrays: dict):
    kind = specs.get("constraint_kind", "none")
    if kind == "none":
        return None, None
    ref = TriMesh(PointCloud(arrays["ref.coords"]),
                  arrays["ref.triangles"].astype(np.int64))
    n_pts = ref.cloud.n_points
    if kind == "volume":
        fn = volume_functional(ref)
    elif kind == "barycenter":
        fn = barycenter_functional(n_pts)
    elif kind == "volume-barycenter":
        fn = volume_functional(ref).stacked(barycenter_functional(n_pts))
    else:
        raise ValueError(f"unknown constraint kind {kind!r}")
    return ConstraintSpec(fn, arrays["constraint.target"]), ref


class GenerativeModel:
    """Shared encode/decode/sample surface of the six model kinds."""

    kind = "base"

    def __init__(self, config: GenModelConfig, std: Standardizer,
                 constraint: ConstraintSpec | None = None,
                 reference: TriMesh | None = None,
                 constraint_kind: str = "none"):
        self.config = config
        self.std = std
        self.constraint = constraint
        self.reference = reference
        self.constraint_kind = constraint_kind
        self.history: dict[str, list[float]] = {}
        self.trained = False

    # -- contract ----------------------------------------------------------

    def encode(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode(self, S: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_codes(self, count: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample(self, count: int, rng: np.random.Generator):
        """Draw codes from the model prior and decode them (projected)."""
        self._need_trained()
        codes = self.sample_codes(count, rng)
        return self.decode(codes), codes

    def _need_trained(self):
        if not self.trained:
            raise RuntimeError(f"{self.kind} model is not trained")

    # -- persistence ---------------------------------------------------------

    def _extra_specs(self) -> dict:
        return {}

    def _state_arrays(self) -> dict:
        raise NotImplementedError

    def _load_arrays(self, arrays: dict) -> None:
        raise NotImplementedError

    def save(self, path, rng_state: dict | None = None, epoch: int = 0) -> None:
        cspecs, carrays = constraint_to_arrays(self.constraint, self.reference,
                                               self.constraint_kind)
        specs = {"kind": self.kind, "config": self.config.to_json(),
                 "history": self.history, **cspecs, **self._extra_specs()}
        arrays = {"std.mean": self.std.mean, "std.scale": self.std.scale,
                  **carrays, **self._state_arrays()}
        save_checkpoint(path, Checkpoint(specs=specs, arrays=arrays,
                                         rng_state=rng_state, epoch=epoch))

    @classmethod
    def _restore_common(cls, ckpt: Checkpoint):
        config = GenModelConfig.from_json(ckpt.specs["config"])
        std = Standardizer(ckpt.arrays["std.mean"], ckpt.arrays["std.scale"])
        spec, ref = constraint_from_arrays(ckpt.specs, ckpt.arrays)
        return config, std, spec, ref, ckpt.specs.get("constraint_kind", "none")


def load_genmodel(path):
    """Rebuild any trained generative model from its checkpoint."""
    from . import aae, began, priors, vae

    ckpt = load_checkpoint(path)
    kind = ckpt.specs["kind"]
    cls = {"vae": vae.VaeModel, "aae": aae.AaeModel, "began": began.BeganModel,
           "nf": priors.AePriorModel, "ebm": priors.AePriorModel,
           "ddpm": priors.AePriorModel}[kind]
    return cls._from_checkpoint(ckpt)
