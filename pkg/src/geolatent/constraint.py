"""Projection of point clouds onto multilinear constraint sets.

The constraint b(a) = c is absorbed in three sequential coordinate-block
corrections: restrict b to one block (affine, since b is multilinear), then
apply the minimum-norm update moving b by one third of the initial defect.
Because each restriction is exact, the three thirds add up and the output
satisfies the constraint to solver precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, MultilinearFunctional, PointCloud, TriMesh
from .geometry import barycenter_functional, volume_functional


class ConstraintRankError(GeometryError):
    def __init__(self, block: str, rank: int, needed: int):
        super().__init__(
            f"constraint unreachable along block {block!r}: restricted matrix "
            f"has rank {rank}, need {needed}")
        self.block = block
        self.rank = rank


@dataclass(frozen=True)
class ConstraintSpec:
    functional: MultilinearFunctional
    target: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.target, dtype=np.float64).reshape(-1)
        if t.size != self.functional.n_components:
            raise GeometryError(f"target has {t.size} entries, functional outputs "
                                f"{self.functional.n_components}")
        # per-block correction systems must be underdetermined or square
        per_block = self.functional.block_reach().sum(axis=0)
        if per_block.max(initial=0) > self.functional.n_points:
            raise GeometryError("more constraint components than points in a block")
        object.__setattr__(self, "target", t)

    def residual(self, cloud: PointCloud) -> np.ndarray:
        return self.functional.evaluate(cloud) - self.target


def restrict_to_block(functional: MultilinearFunctional, cloud: PointCloud,
                      block: str):
    """Matrix A and offset b0 with A @ block_coords + b0 = functional(cloud)."""
    return functional.restrict(cloud, block)


def _min_norm_step(A: np.ndarray, rhs: np.ndarray, block: str):
    """Minimum-norm delta with A @ delta = rhs, via Cholesky of A A^T.

    Returns (delta, K) where K = A^T (A A^T)^-1, the map applied to rhs.
    """
    G = A @ A.T
    l = G.shape[0]
    tr = np.trace(G)
    if tr <= 0.0:
        raise ConstraintRankError(block, 0, l)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(G + (1e-12 * tr / l) * np.eye(l))
        except np.linalg.LinAlgError:
            raise ConstraintRankError(block, int(np.linalg.matrix_rank(A)), l) from None
    W = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(l)))
    K = A.T @ W
    return K @ rhs, K


def _project(cloud: PointCloud, spec: ConstraintSpec, want_grad: bool):
    f = spec.functional
    delta_c = spec.target - f.evaluate(cloud)
    scale = 1.0 + float(np.abs(spec.target).max())
    if float(np.abs(delta_c).max()) <= 1e-13 * scale:
        return cloud, None

    # A purely multilinear component is reachable from all three blocks and
    # each absorbs a third of its defect; a component living in fewer blocks
    # (barycenter means) splits over the blocks that can actually move it.
    reach = f.block_reach()
    n_reach = reach.sum(axis=1)
    stuck = (n_reach == 0) & (np.abs(delta_c) > 1e-13 * scale)
    if stuck.any():
        raise ConstraintRankError("xyz", 0, int(stuck.sum()))
    weights = np.where(n_reach > 0, 1.0 / np.maximum(n_reach, 1), 0.0)

    grad0 = None
    if want_grad:
        # gradient of b at the input: the three affine restrictions, interleaved
        grad0 = np.zeros((f.n_components, 3 * f.n_points))
        for b_idx, name in enumerate("xyz"):
            A0, _ = f.restrict(cloud, name)
            grad0[:, b_idx::3] = A0

    x, y, z = (np.array(v) for v in cloud.blocks())
    current = [x, y, z]
    step = weights * delta_c
    bwd = []
    for b_idx, name in enumerate("xyz"):
        rows = np.nonzero(reach[:, b_idx])[0]
        if rows.size == 0:
            bwd.append((rows, None))
            continue
        working = PointCloud.from_points(np.stack(current, axis=1))
        A, _ = f.restrict(working, name)
        delta, K = _min_norm_step(A[rows], step[rows], name)
        current[b_idx] = current[b_idx] + delta
        bwd.append((rows, K))
    out = PointCloud.from_points(np.stack(current, axis=1))
    return out, (grad0, weights, bwd) if want_grad else None


def project_constraint(cloud: PointCloud, spec: ConstraintSpec) -> PointCloud:
    """Smallest three-block correction achieving b(cloud) = target."""
    out, _ = _project(cloud, spec, want_grad=False)
    return out


def project_with_grad_data(cloud: PointCloud, spec: ConstraintSpec):
    """Projection plus the frozen linear maps for a local-linear backward pass.

    Returns (projected, data); data is None when no correction was needed,
    else (grad0, weights, blocks) with grad0 the (l, n) gradient of b at the
    input, weights the per-component defect fractions, and blocks a list of
    (component rows, minimum-norm solve map K) per coordinate block.
    """
    return _project(cloud, spec, want_grad=True)


def project_pullback(grad_out: np.ndarray, data) -> np.ndarray:
    """Vector-Jacobian product of the projection, linearized at the input.

    The multilinear structure matrices are frozen at their forward values,
    so the map is a + correction(delta_c(a)) with delta_c differentiated
    through grad0 only.
    """
    if data is None:
        return grad_out
    grad0, weights, blocks = data
    l = grad0.shape[0]
    acc = np.zeros(l)
    for b_idx, (rows, K) in enumerate(blocks):
        if rows.size == 0:
            continue
        gb = grad_out[b_idx::3]
        acc[rows] += weights[rows] * (K.T @ gb)
    return grad_out - grad0.T @ acc


def make_constraint(kind: str, mesh: TriMesh) -> ConstraintSpec:
    """Constraint functional of the named kind, targeted at the mesh's own value."""
    if kind == "volume":
        fn = volume_functional(mesh)
    elif kind == "barycenter":
        fn = barycenter_functional(mesh.cloud.n_points)
    elif kind == "volume-barycenter":
        fn = volume_functional(mesh).stacked(barycenter_functional(mesh.cloud.n_points))
    else:
        raise GeometryError(f"unknown constraint kind {kind!r}")
    cloud = mesh.cloud
    target = fn.evaluate(cloud)
    return ConstraintSpec(fn, target)


CONSTRAINT_KINDS = ("volume", "barycenter", "volume-barycenter")


def constrained_sample(mesh: TriMesh, template, spec: ConstraintSpec, m: int,
                       rng: np.random.Generator, low: float = 0.0,
                       high: float = 0.2):
    """m FFD-deformed, constraint-projected clouds plus the FFD parameters."""
    from .dataset import GeometryDataset
    from .ffd import ffd_deform, sample_lattice

    if m < 1:
        raise GeometryError("need m >= 1 samples")
    clouds = np.empty((m, mesh.cloud.coords.size))
    params = np.empty((m, template.n_parameters))
    for i in range(m):
        lat = sample_lattice(template, low, high, rng)
        deformed = ffd_deform(mesh.cloud, lat)
        projected = project_constraint(deformed, spec)
        clouds[i] = projected.coords
        params[i] = lat.parameters()
    return GeometryDataset(clouds=clouds, ffd_params=params, latents=None,
                           qoi=None, reference=mesh)
