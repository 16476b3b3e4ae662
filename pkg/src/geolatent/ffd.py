"""Trilinear Bernstein free-form deformation.

A lattice of (L, M, N) control points spans an axis-aligned box; displacing
control points deforms every cloud point inside the box through the
tensor-product Bernstein basis. Frozen control points never move, which is
how the named parameter presets pin down their free-parameter counts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .geometry import GeometryError, PointCloud


@dataclass(frozen=True)
class FfdLattice:
    dims: tuple[int, int, int]
    box_min: np.ndarray
    box_max: np.ndarray
    frozen: np.ndarray        # (L, M, N) bool
    displacement: np.ndarray  # (L, M, N, 3)

    def __post_init__(self):
        L, M, N = self.dims
        if min(L, M, N) < 2:
            raise GeometryError("lattice needs at least 2 control points per axis")
        bmin = np.asarray(self.box_min, dtype=np.float64).reshape(3)
        bmax = np.asarray(self.box_max, dtype=np.float64).reshape(3)
        if not np.all(bmax > bmin):
            raise GeometryError("degenerate lattice box")
        frz = np.asarray(self.frozen, dtype=bool).reshape(L, M, N)
        disp = np.asarray(self.displacement, dtype=np.float64).reshape(L, M, N, 3)
        if np.any(disp[frz] != 0.0):
            raise GeometryError("frozen control point carries displacement")
        for name, val in (("box_min", bmin), ("box_max", bmax),
                          ("frozen", frz), ("displacement", disp)):
            val = np.ascontiguousarray(val)
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    @property
    def n_free_points(self) -> int:
        return int((~self.frozen).sum())

    @property
    def n_parameters(self) -> int:
        return 3 * self.n_free_points

    def control_positions(self) -> np.ndarray:
        """Undisplaced lattice positions, shape (L, M, N, 3)."""
        L, M, N = self.dims
        gi = np.linspace(0.0, 1.0, L)
        gj = np.linspace(0.0, 1.0, M)
        gk = np.linspace(0.0, 1.0, N)
        grid = np.stack(np.meshgrid(gi, gj, gk, indexing="ij"), axis=-1)
        return self.box_min + grid * (self.box_max - self.box_min)

    def parameters(self) -> np.ndarray:
        """Free displacements flattened in C order (i, j, k, component)."""
        return self.displacement[~self.frozen].reshape(-1).copy()

    def with_parameters(self, params) -> "FfdLattice":
        params = np.asarray(params, dtype=np.float64).reshape(-1)
        if params.size != self.n_parameters:
            raise GeometryError(f"expected {self.n_parameters} parameters, got {params.size}")
        disp = np.zeros_like(self.displacement)
        disp[~self.frozen] = params.reshape(-1, 3)
        return replace(self, displacement=disp)

    def to_json(self) -> str:
        return json.dumps({
            "dims": list(self.dims),
            "box_min": self.box_min.tolist(),
            "box_max": self.box_max.tolist(),
            "frozen": self.frozen.astype(int).reshape(-1).tolist(),
            "displacement": self.displacement.reshape(-1).tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "FfdLattice":
        d = json.loads(text)
        dims = tuple(d["dims"])
        return cls(dims, np.array(d["box_min"]), np.array(d["box_max"]),
                   np.array(d["frozen"], dtype=bool).reshape(dims),
                   np.array(d["displacement"]).reshape(dims + (3,)))


def _binomial_table(dims) -> np.ndarray:
    L, M, N = dims
    bl = np.array([math.comb(L - 1, i) for i in range(L)], dtype=np.float64)
    bm = np.array([math.comb(M - 1, j) for j in range(M)], dtype=np.float64)
    bn = np.array([math.comb(N - 1, k) for k in range(N)], dtype=np.float64)
    return bl[:, None, None] * bm[None, :, None] * bn[None, None, :]


def ffd_deform(cloud: PointCloud, lattice: FfdLattice) -> PointCloud:
    """Deform the cloud; points outside the lattice box pass through."""
    ctrl = lattice.control_positions() + lattice.displacement
    out = kernels.ffd_eval(np.ascontiguousarray(cloud.points),
                           lattice.box_min, lattice.box_max,
                           np.ascontiguousarray(ctrl), _binomial_table(lattice.dims))
    return PointCloud.from_points(out)


def sample_lattice(template: FfdLattice, low: float, high: float,
                   rng: np.random.Generator) -> FfdLattice:
    """Fresh lattice with free displacements i.i.d. uniform [low, high]."""
    if low > high:
        raise GeometryError(f"low {low} > high {high}")
    params = rng.uniform(low, high, size=template.n_parameters)
    return template.with_parameters(params)


# ---------------------------------------------------------------------------
# presets

def lattice_for_box(preset: str, box_min, box_max) -> FfdLattice:
    """Named control-point layouts.

    bunny54: 3x3x3 grid with the bottom layer (k = 0) frozen, 54 free
    parameters. hull81: 5x5x5 grid with only the interior 3x3x3 free, 81
    free parameters.
    """
    box_min = np.asarray(box_min, dtype=np.float64)
    box_max = np.asarray(box_max, dtype=np.float64)
    if preset == "bunny54":
        dims = (3, 3, 3)
        frozen = np.zeros(dims, dtype=bool)
        frozen[:, :, 0] = True
    elif preset == "hull81":
        dims = (5, 5, 5)
        frozen = np.ones(dims, dtype=bool)
        frozen[1:4, 1:4, 1:4] = False
    else:
        raise GeometryError(f"unknown lattice preset {preset!r}")
    disp = np.zeros(dims + (3,))
    return FfdLattice(dims, box_min, box_max, frozen, disp)


def lattice_for_cloud(preset: str, cloud: PointCloud, margin: float = 0.0) -> FfdLattice:
    bmin, bmax = cloud.bounding_box()
    pad = margin * (bmax - bmin)
    return lattice_for_box(preset, bmin - pad, bmax + pad)


PRESET_NAMES = ("bunny54", "hull81")
