"""Parametrized physics-informed network for the steady Laplace problem on
deformed geometries.

The network maps (geometry parameter, x, y, z) to the scalar field; the
interior residual uses a 7-point central-difference Laplacian (exact on
quadratics), the boundary term penalizes the Dirichlet mismatch, and both
are averaged over per-geometry collocation sets.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .geometry import GeometryError, TriMesh
from .genmodels.base import Standardizer, check_finite
from .kernels import inside_mesh
from .nn import AdamW, Checkpoint, Mlp, MlpSpec, Tensor
from .nn import load_checkpoint, save_checkpoint


@dataclass(frozen=True)
class PdeProblem:
    """Steady Laplace problem: interior residual Delta u, Dirichlet data g."""

    name: str
    boundary: callable                 # g(x, y, z) -> value
    oracle: callable | None = None     # analytic solution, when one exists


def _harmonic_z(x, y, z):
    return z


def _harmonic_xy(x, y, z):
    return x * x - y * y


def _exp_z(x, y, z):
    return np.exp(z)


PROBLEMS = {
    "harmonic-z": PdeProblem("harmonic-z", _harmonic_z, _harmonic_z),
    "harmonic-xy": PdeProblem("harmonic-xy", _harmonic_xy, _harmonic_xy),
    "exp-z": PdeProblem("exp-z", _exp_z, None),
}


@dataclass(frozen=True)
class CollocationSet:
    interior: np.ndarray   # (P, 3)
    boundary: np.ndarray   # (Q, 3)
    param: np.ndarray      # geometry parameter vector


def sample_collocation(mesh: TriMesh, n_interior: int, n_boundary: int,
                       rng: np.random.Generator,
                       param: np.ndarray | None = None) -> CollocationSet:
    """Interior points by bounding-box rejection with the ray-parity test;
    boundary points by area-weighted barycentric triangle sampling."""
    bmin, bmax = mesh.cloud.bounding_box()
    tv0, tv1, tv2 = mesh.triangle_corners()

    interior = np.empty((0, 3))
    attempts = 0
    while interior.shape[0] < n_interior:
        want = max(n_interior - interior.shape[0], 32)
        cand = rng.uniform(bmin, bmax, size=(4 * want, 3))
        keep = inside_mesh(np.ascontiguousarray(cand), tv0, tv1, tv2)
        attempts += cand.shape[0]
        interior = np.concatenate([interior, cand[keep]])[: max(n_interior, 1)]
        if attempts > 100 * (n_interior + 1) and interior.shape[0] < 0.01 * attempts:
            raise GeometryError("interior rejection acceptance below 1%")
    interior = interior[:n_interior]

    area = 0.5 * np.linalg.norm(np.cross(tv1 - tv0, tv2 - tv0), axis=1)
    tri = rng.choice(area.size, size=n_boundary, p=area / area.sum())
    r1 = np.sqrt(rng.uniform(size=(n_boundary, 1)))
    r2 = rng.uniform(size=(n_boundary, 1))
    boundary = ((1.0 - r1) * tv0[tri] + r1 * (1.0 - r2) * tv1[tri]
                + r1 * r2 * tv2[tri])
    return CollocationSet(interior=interior, boundary=boundary,
                          param=np.zeros(0) if param is None else np.asarray(param, float))


def laplacian_fd(u, point, h: float) -> float:
    """7-point central second-difference Laplacian of a scalar callable.

    u takes an (n, 3) array of points and returns n values.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    point = np.asarray(point, float).reshape(3)
    pts = [point]
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        pts += [point + e, point - e]
    vals = np.asarray(u(np.array(pts)), float).reshape(-1)
    return float((vals[1:].sum() - 6.0 * vals[0]) / (h * h))


def _stencil_points(pts: np.ndarray, h: float) -> np.ndarray:
    """Rows [center; x+; x-; y+; y-; z+; z-], each block len(pts)."""
    blocks = [pts]
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        blocks += [pts + e, pts - e]
    return np.concatenate(blocks, axis=0)


@dataclass
class PinnConfig:
    param_dim: int
    width: int = 64
    depth: int = 2
    epochs: int = 1000
    lr: float = 2e-3
    lr_final: float | None = None   # geometric per-epoch decay toward this
    lambda_b: float = 10.0
    h_rel: float = 1e-3
    n_interior: int = 64
    n_boundary: int = 96
    seed: int = 0

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in
                ("param_dim", "width", "depth", "epochs", "lr", "lr_final",
                 "lambda_b", "h_rel", "n_interior", "n_boundary", "seed")}


class PinnModel:
    """u(param, x, y, z) as an MLP over normalized inputs with an affine
    output head calibrated to the boundary-data scale."""

    def __init__(self, config: PinnConfig, param_kind: str = "ffd"):
        self.config = config
        self.param_kind = param_kind
        init = rngmod.stream(config.seed, "pinn-init")
        self.net = Mlp(MlpSpec(config.param_dim + 3, 1, config.width,
                               config.depth), init)
        self.in_std = Standardizer(np.zeros(config.param_dim + 3),
                                   np.ones(config.param_dim + 3))
        self.out_mu = 0.0
        self.out_scale = 1.0
        self.h = 1e-3
        self.history: list[float] = []
        self.epoch_seconds: list[float] = []

    def _inputs(self, params_rows: np.ndarray, pts: np.ndarray) -> np.ndarray:
        return self.in_std.transform(np.concatenate([params_rows, pts], axis=1))

    def forward_t(self, inputs: np.ndarray | Tensor) -> Tensor:
        t = inputs if isinstance(inputs, Tensor) else Tensor(inputs)
        return self.net(t) * self.out_scale + self.out_mu

    def predict(self, param: np.ndarray, pts: np.ndarray) -> np.ndarray:
        param = np.asarray(param, float).reshape(1, -1)
        rows = np.repeat(param, pts.shape[0], axis=0)
        return self.forward_t(self._inputs(rows, pts)).data.ravel()

    def laplacian(self, param: np.ndarray, pts: np.ndarray) -> np.ndarray:
        param = np.asarray(param, float).reshape(1, -1)
        sten = _stencil_points(pts, self.h)
        rows = np.repeat(param, sten.shape[0], axis=0)
        u = self.forward_t(self._inputs(rows, sten)).data.reshape(7, -1)
        return (u[1:].sum(axis=0) - 6.0 * u[0]) / (self.h * self.h)

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        specs = {"kind": "pinn", "config": self.config.to_json(),
                 "param_kind": self.param_kind, "history": self.history,
                 "epoch_seconds": self.epoch_seconds}
        arrays = {"in.mean": self.in_std.mean, "in.scale": self.in_std.scale,
                  "out": np.array([self.out_mu, self.out_scale, self.h]),
                  **self.net.state_arrays("net")}
        save_checkpoint(path, Checkpoint(specs=specs, arrays=arrays))

    @classmethod
    def load(cls, path) -> "PinnModel":
        ckpt = load_checkpoint(path)
        if ckpt.specs.get("kind") != "pinn":
            raise ValueError("not a PINN checkpoint")
        model = cls(PinnConfig(**ckpt.specs["config"]), ckpt.specs["param_kind"])
        model.in_std = Standardizer(ckpt.arrays["in.mean"], ckpt.arrays["in.scale"])
        model.out_mu, model.out_scale, model.h = ckpt.arrays["out"]
        model.net.load_state("net", ckpt.arrays)
        model.history = ckpt.specs.get("history", [])
        model.epoch_seconds = ckpt.specs.get("epoch_seconds", [])
        return model


def pinn_loss(model: PinnModel, problem: PdeProblem,
              colloc: list[CollocationSet]) -> float:
    """Mean squared interior residual + lambda_b * mean squared boundary
    mismatch, over a batch of per-geometry collocation sets."""
    loss, _, _ = _assemble_loss(model, problem, colloc)
    return float(loss.data)


def _assemble_loss(model: PinnModel, problem: PdeProblem,
                   colloc: list[CollocationSet]):
    h = model.h
    int_inputs, bnd_inputs, bnd_vals = [], [], []
    n_int = []
    for cs in colloc:
        sten = _stencil_points(cs.interior, h)
        rows = np.repeat(cs.param.reshape(1, -1), sten.shape[0], axis=0)
        int_inputs.append(model._inputs(rows, sten))
        n_int.append(cs.interior.shape[0])
        rows_b = np.repeat(cs.param.reshape(1, -1), cs.boundary.shape[0], axis=0)
        bnd_inputs.append(model._inputs(rows_b, cs.boundary))
        b = cs.boundary
        bnd_vals.append(problem.boundary(b[:, 0], b[:, 1], b[:, 2]))
    if len(set(n_int)) == 1:
        # uniform sizes: one stacked stencil evaluation
        P = n_int[0]
        big = Tensor(np.concatenate(int_inputs, axis=0))
        u = model.forward_t(big).reshape(len(colloc), 7, P)
        lap = (u[:, 1, :] + u[:, 2, :] + u[:, 3, :] + u[:, 4, :]
               + u[:, 5, :] + u[:, 6, :] - 6.0 * u[:, 0, :]) * (1.0 / (h * h))
        interior_ms = (lap * lap).mean()
    else:
        parts = []
        for inp, P in zip(int_inputs, n_int):
            u = model.forward_t(Tensor(inp)).reshape(7, P)
            lap = (u[1] + u[2] + u[3] + u[4] + u[5] + u[6] - 6.0 * u[0]) \
                * (1.0 / (h * h))
            parts.append((lap * lap).sum())
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        interior_ms = total * (1.0 / sum(n_int))
    ub = model.forward_t(Tensor(np.concatenate(bnd_inputs, axis=0))).reshape(-1)
    gb = Tensor(np.concatenate(bnd_vals))
    boundary_ms = ((ub - gb) ** 2.0).mean()
    loss = interior_ms + model.config.lambda_b * boundary_ms
    return loss, interior_ms, boundary_ms


def fit_pinn(meshes: list[TriMesh], params: np.ndarray, problem: PdeProblem,
             config: PinnConfig, param_kind: str = "ffd") -> PinnModel:
    """Train on fixed per-geometry collocation sets; loss history and
    per-epoch wall times are recorded on the model."""
    params = np.atleast_2d(np.asarray(params, float))
    if params.shape[0] != len(meshes):
        raise GeometryError("one parameter row per mesh required")
    if params.shape[1] != config.param_dim:
        raise GeometryError(f"param dim {params.shape[1]} != config.param_dim "
                            f"{config.param_dim}")
    model = PinnModel(config, param_kind)

    crng = rngmod.stream(config.seed, "pinn-collocation")
    colloc = [sample_collocation(mesh, config.n_interior, config.n_boundary,
                                 crng, param=params[i])
              for i, mesh in enumerate(meshes)]

    # normalization from the training population
    all_pts = np.concatenate([np.concatenate([c.interior, c.boundary])
                              for c in colloc])
    lo, hi = all_pts.min(axis=0), all_pts.max(axis=0)
    model.h = config.h_rel * float(np.linalg.norm(hi - lo))
    pstd = Standardizer.fit(params) if params.shape[1] else None
    mean = np.concatenate([pstd.mean if pstd else np.zeros(0), all_pts.mean(axis=0)])
    scale = np.concatenate([pstd.scale if pstd else np.ones(0), all_pts.std(axis=0)])
    model.in_std = Standardizer(mean, np.maximum(scale, 1e-8))
    bvals = np.concatenate([problem.boundary(c.boundary[:, 0], c.boundary[:, 1],
                                             c.boundary[:, 2]) for c in colloc])
    model.out_mu = float(bvals.mean())
    model.out_scale = float(max(bvals.std(), 1e-8))

    opt = AdamW(model.net.params(), lr=config.lr)
    decay = 1.0
    if config.lr_final is not None and config.epochs > 1:
        decay = (config.lr_final / config.lr) ** (1.0 / (config.epochs - 1))
    model.history = []
    model.epoch_seconds = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        opt.zero_grad()
        loss, _, _ = _assemble_loss(model, problem, colloc)
        loss.backward()
        opt.step()
        opt.lr *= decay
        model.epoch_seconds.append(time.perf_counter() - t0)
        model.history.append(check_finite("pinn", epoch, float(loss.data)))
    return model


def pinn_errors(model: PinnModel, eval_sets: list[tuple[np.ndarray, np.ndarray]],
                oracle) -> tuple[float, float]:
    """Range-normalized L1 and L2 errors against an analytic oracle.

    eval_sets holds (param, points) per geometry; the normalizing range is
    taken over all oracle values.
    """
    m = len(eval_sets)
    preds, refs = [], []
    for param, pts in eval_sets:
        preds.append(model.predict(param, pts))
        refs.append(np.asarray(oracle(pts[:, 0], pts[:, 1], pts[:, 2]), float))
    rng_all = np.concatenate(refs)
    spread = float(rng_all.max() - rng_all.min())
    if spread == 0.0:
        raise GeometryError("oracle range is zero; metrics undefined")
    l1 = sum(np.abs(p - r).sum() for p, r in zip(preds, refs))
    l2 = np.sqrt(sum(((p - r) ** 2).sum() for p, r in zip(preds, refs)))
    return float(l1 / (m * spread)), float(l2 / (m * spread))
