"""Point clouds, triangle meshes, OFF files, and multilinear quantities.

Coordinates are stored flat with x/y/z interleaved: point i occupies
coords[3i:3i+3], so the x entries sit at flat indices j with j % 3 == 0,
y at j % 3 == 1, z at j % 3 == 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class GeometryError(ValueError):
    pass


class OffParseError(GeometryError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class OpenSurfaceWarning(UserWarning):
    """Volume requested on a surface that is not closed and oriented."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointCloud:
    """Flat float64 coordinate vector of length 3 * n_points."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64).ravel()
        if c.size % 3 != 0:
            raise GeometryError(f"coordinate count {c.size} not divisible by 3")
        if not np.all(np.isfinite(c)):
            raise GeometryError("non-finite coordinate")
        object.__setattr__(self, "coords", _frozen(c))

    @classmethod
    def from_points(cls, pts) -> "PointCloud":
        pts = np.asarray(pts, dtype=np.float64)
        return cls(pts.reshape(-1))

    @property
    def n_points(self) -> int:
        return self.coords.size // 3

    @property
    def points(self) -> np.ndarray:
        return self.coords.reshape(-1, 3)

    def blocks(self):
        """(x, y, z) coordinate blocks as contiguous arrays."""
        p = self.points
        return (np.ascontiguousarray(p[:, 0]), np.ascontiguousarray(p[:, 1]),
                np.ascontiguousarray(p[:, 2]))

    def bounding_box(self):
        p = self.points
        return p.min(axis=0), p.max(axis=0)


@dataclass(frozen=True)
class TriMesh:
    cloud: PointCloud
    triangles: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        n = self.cloud.n_points
        if t.size and (t.min() < 0 or t.max() >= n):
            raise GeometryError(f"triangle index out of range [0, {n})")
        if t.size:
            degen = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
            if degen.any():
                raise GeometryError(f"degenerate triangle at row {int(np.nonzero(degen)[0][0])}")
        object.__setattr__(self, "triangles", _frozen(t))

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def with_cloud(self, cloud: PointCloud) -> "TriMesh":
        """Same connectivity over new coordinates."""
        return TriMesh(cloud, self.triangles)

    def is_closed_oriented(self) -> bool:
        """Every undirected edge shared by exactly 2 triangles, once per direction."""
        t = self.triangles
        if t.shape[0] == 0:
            return False
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        directed = {}
        for a, b in edges:
            key = (int(a), int(b))
            directed[key] = directed.get(key, 0) + 1
        for (a, b), cnt in directed.items():
            if cnt != 1 or directed.get((b, a), 0) != 1:
                return False
        return True

    def triangle_corners(self):
        """Per-triangle corner coordinates, three (T, 3) arrays."""
        p = self.cloud.points
        t = self.triangles
        return (np.ascontiguousarray(p[t[:, 0]]), np.ascontiguousarray(p[t[:, 1]]),
                np.ascontiguousarray(p[t[:, 2]]))


@dataclass(frozen=True)
class MultilinearFunctional:
    """Sum of monomials, each of degree <= 1 per coordinate block.

    Term t contributes coef[t] * x[xi[t]] * y[yi[t]] * z[zi[t]] to component
    comp[t]; an index of -1 drops that factor. Restricting to any one block
    with the others frozen is therefore affine.
    """

    coef: np.ndarray
    xi: np.ndarray
    yi: np.ndarray
    zi: np.ndarray
    comp: np.ndarray
    n_components: int
    n_points: int

    def __post_init__(self):
        object.__setattr__(self, "coef", _frozen(np.asarray(self.coef, dtype=np.float64)))
        for name in ("xi", "yi", "zi", "comp"):
            arr = _frozen(np.asarray(getattr(self, name), dtype=np.int64))
            if arr.size and name != "comp" and arr.max() >= self.n_points:
                raise GeometryError(f"{name} references point >= {self.n_points}")
            object.__setattr__(self, name, arr)
        if self.comp.size and (self.comp.min() < 0 or self.comp.max() >= self.n_components):
            raise GeometryError("component label out of range")

    @classmethod
    def from_terms(cls, components, n_points):
        """components: per-output list of (coef, x_index|None, y_index|None, z_index|None)."""
        coef, xi, yi, zi, comp = [], [], [], [], []
        for c_idx, terms in enumerate(components):
            for (w, ix, iy, iz) in terms:
                coef.append(float(w))
                xi.append(-1 if ix is None else int(ix))
                yi.append(-1 if iy is None else int(iy))
                zi.append(-1 if iz is None else int(iz))
                comp.append(c_idx)
        return cls(np.array(coef), np.array(xi, dtype=np.int64),
                   np.array(yi, dtype=np.int64), np.array(zi, dtype=np.int64),
                   np.array(comp, dtype=np.int64), len(components), n_points)

    @property
    def n_terms(self) -> int:
        return self.coef.size

    def evaluate(self, cloud: PointCloud) -> np.ndarray:
        if cloud.n_points != self.n_points:
            raise GeometryError(f"cloud has {cloud.n_points} points, functional expects {self.n_points}")
        x, y, z = cloud.blocks()
        return kernels.ml_eval(self.coef, self.xi, self.yi, self.zi, self.comp,
                               x, y, z, self.n_components)

    def restrict(self, cloud: PointCloud, block: str):
        """Affine restriction A, b0 with A @ block + b0 == evaluate(cloud)."""
        if cloud.n_points != self.n_points:
            raise GeometryError(f"cloud has {cloud.n_points} points, functional expects {self.n_points}")
        b = {"x": 0, "y": 1, "z": 2}[block.lower()]
        x, y, z = cloud.blocks()
        return kernels.ml_restrict(self.coef, self.xi, self.yi, self.zi, self.comp,
                                   x, y, z, self.n_components, b)

    def block_reach(self) -> np.ndarray:
        """(n_components, 3) bool: component has at least one term in block."""
        reach = np.zeros((self.n_components, 3), dtype=bool)
        for b, idx in enumerate((self.xi, self.yi, self.zi)):
            has = idx >= 0
            reach[:, b] = np.bincount(self.comp[has], minlength=self.n_components) > 0
        return reach

    def stacked(self, other: "MultilinearFunctional") -> "MultilinearFunctional":
        """Concatenate output components of two functionals over one cloud."""
        if other.n_points != self.n_points:
            raise GeometryError("point-count mismatch in stacked functionals")
        return MultilinearFunctional(
            np.concatenate([self.coef, other.coef]),
            np.concatenate([self.xi, other.xi]),
            np.concatenate([self.yi, other.yi]),
            np.concatenate([self.zi, other.zi]),
            np.concatenate([self.comp, other.comp + self.n_components]),
            self.n_components + other.n_components, self.n_points)


# ---------------------------------------------------------------------------
# quantities

def signed_volume(mesh: TriMesh) -> float:
    """Signed enclosed volume of a closed oriented surface.

    Open or inconsistently oriented surfaces get a value anyway (the same
    triangle sum) plus an OpenSurfaceWarning.
    """
    if not mesh.is_closed_oriented():
        warnings.warn("surface is not closed and consistently oriented; "
                      "volume value is not meaningful", OpenSurfaceWarning,
                      stacklevel=2)
    return float(kernels.signed_volume(mesh.cloud.points, mesh.triangles))


def barycenter(cloud: PointCloud):
    """Arithmetic mean of the points."""
    if cloud.n_points == 0:
        raise GeometryError("barycenter of empty cloud")
    p = cloud.points
    m = p.mean(axis=0)
    return (float(m[0]), float(m[1]), float(m[2]))


def volume_functional(mesh: TriMesh) -> MultilinearFunctional:
    """Signed volume as a 1-component multilinear functional (6 terms per triangle)."""
    t = mesh.triangles
    T = t.shape[0]
    i, j, k = t[:, 0], t[:, 1], t[:, 2]
    # (coef, x_idx, y_idx, z_idx) per term of the triangle sum
    sixth = 1.0 / 6.0
    coef = np.tile(np.array([-sixth, sixth, sixth, -sixth, -sixth, sixth]), T)
    xi = np.stack([k, j, k, i, j, i], axis=1).ravel()
    yi = np.stack([j, k, i, k, i, j], axis=1).ravel()
    zi = np.stack([i, i, j, j, k, k], axis=1).ravel()
    comp = np.zeros(6 * T, dtype=np.int64)
    return MultilinearFunctional(coef, xi, yi, zi, comp, 1, mesh.cloud.n_points)


def barycenter_functional(n_points: int) -> MultilinearFunctional:
    """Point mean as a 3-component affine functional."""
    if n_points < 1:
        raise GeometryError("barycenter functional needs n_points >= 1")
    idx = np.arange(n_points, dtype=np.int64)
    none = np.full(n_points, -1, dtype=np.int64)
    coef = np.full(3 * n_points, 1.0 / n_points)
    xi = np.concatenate([idx, none, none])
    yi = np.concatenate([none, idx, none])
    zi = np.concatenate([none, none, idx])
    comp = np.repeat(np.arange(3, dtype=np.int64), n_points)
    return MultilinearFunctional(coef, xi, yi, zi, comp, 3, n_points)


# ---------------------------------------------------------------------------
# OFF files

def load_off(path) -> TriMesh:
    """Parse an ASCII OFF file; quads and larger polygons are fan-split."""
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.readlines()

    tokens = []  # (line_no, token)
    for ln, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0]
        for tok in body.split():
            tokens.append((ln, tok))
    pos = 0

    def next_tok(what):
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][0] if tokens else 1
            raise OffParseError(path, last, f"unexpected end of file, wanted {what}")
        ln, tok = tokens[pos]
        pos += 1
        return ln, tok

    ln, magic = next_tok("OFF header")
    if magic != "OFF":
        raise OffParseError(path, ln, f"expected 'OFF' header, found {magic!r}")

    def read_int(what):
        ln, tok = next_tok(what)
        try:
            return int(tok)
        except ValueError:
            raise OffParseError(path, ln, f"non-integer {what}: {tok!r}") from None

    def read_float(what):
        ln, tok = next_tok(what)
        try:
            return float(tok)
        except ValueError:
            raise OffParseError(path, ln, f"non-numeric {what}: {tok!r}") from None

    nv = read_int("vertex count")
    nf = read_int("face count")
    read_int("edge count")
    verts = np.empty((nv, 3))
    for v in range(nv):
        for c in range(3):
            verts[v, c] = read_float(f"vertex {v} coordinate")
    tris = []
    for f in range(nf):
        ln0 = tokens[pos][0] if pos < len(tokens) else None
        cnt = read_int(f"face {f} vertex count")
        if cnt < 3:
            raise OffParseError(path, ln0, f"face {f} has {cnt} vertices")
        idx = [read_int(f"face {f} index") for _ in range(cnt)]
        for i in idx:
            if not 0 <= i < nv:
                raise OffParseError(path, ln0, f"face index {i} out of range [0, {nv})")
        for a in range(1, cnt - 1):
            tris.append((idx[0], idx[a], idx[a + 1]))
    if pos != len(tokens):
        ln, tok = tokens[pos]
        raise OffParseError(path, ln, f"trailing content: {tok!r}")
    return TriMesh(PointCloud.from_points(verts),
                   np.array(tris, dtype=np.int64).reshape(-1, 3))


def save_off(mesh: TriMesh, path) -> None:
    """Write ASCII OFF with 17 significant digits (lossless float64 round trip)."""
    lines = ["OFF", f"{mesh.cloud.n_points} {mesh.n_triangles} 0"]
    for p in mesh.cloud.points:
        lines.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for t in mesh.triangles:
        lines.append(f"3 {t[0]} {t[1]} {t[2]}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# procedural meshes

def make_icosphere(subdivisions: int, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron projected to a sphere, outward oriented."""
    if not 0 <= subdivisions <= 6:
        raise GeometryError("subdivisions must be in [0, 6]")
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for (a, b, c) in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    pts = np.array(verts) * radius
    return TriMesh(PointCloud.from_points(pts), np.array(faces, dtype=np.int64))


def vertex_areas(mesh: TriMesh) -> np.ndarray:
    """One third of incident triangle area per vertex (quadrature weights)."""
    a, b, c = mesh.triangle_corners()
    tri_area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    out = np.zeros(mesh.cloud.n_points)
    for col in range(3):
        np.add.at(out, mesh.triangles[:, col], tri_area / 3.0)
    return out


def surface_integral(mesh: TriMesh, fn) -> float:
    """Vertex-area quadrature of a scalar field fn(x, y, z) over the surface."""
    p = mesh.cloud.points
    vals = fn(p[:, 0], p[:, 1], p[:, 2])
    return float(np.dot(vals, vertex_areas(mesh)))
