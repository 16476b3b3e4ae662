"""Shared test oracles: finite-difference gradient checking, quadrature JS
divergence for 1-D Gaussian pairs, and small reference meshes."""

import numpy as np

from geolatent.geometry import PointCloud, TriMesh


def grad_check(loss_fn, params, h=1e-6, floor=1e-6):
    """Worst relative disagreement between autodiff and central differences.

    loss_fn rebuilds the scalar loss from current param data. The relative
    error uses a floor tied to the gradient scale so structurally-zero
    gradients are not dominated by finite-difference cancellation noise.
    """
    loss = loss_fn()
    for p in params:
        p.grad = None
    loss.backward()
    grads = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
             for p in params]
    scale = max(float(np.abs(g).max()) for g in grads)
    atol = max(floor, 1e-6 * scale)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp = float(loss_fn().data)
            flat[i] = old - h
            lm = float(loss_fn().data)
            flat[i] = old
            fd = (lp - lm) / (2.0 * h)
            err = abs(fd - gf[i]) / max(abs(fd), abs(gf[i]), atol)
            worst = max(worst, err)
    return worst


def js_quadrature_gaussians(m1, s1, m2, s2, n_grid=20001):
    """Jensen-Shannon divergence of two 1-D Gaussians, base-2 logs, halved
    (so identical inputs give 0 and disjoint supports approach 1)."""
    lo = min(m1 - 12 * s1, m2 - 12 * s2)
    hi = max(m1 + 12 * s1, m2 + 12 * s2)
    x = np.linspace(lo, hi, n_grid)

    def pdf(m, s):
        return np.exp(-0.5 * ((x - m) / s) ** 2) / (s * np.sqrt(2 * np.pi))

    p = pdf(m1, s1)
    q = pdf(m2, s2)
    mix = 0.5 * (p + q)
    eps = 1e-300

    def kl2(a, b):
        integrand = np.where(a > eps, a * np.log2(np.maximum(a, eps) / np.maximum(b, eps)), 0.0)
        return np.trapezoid(integrand, x)

    return 0.5 * (kl2(p, mix) + kl2(q, mix))


def unit_tetra() -> TriMesh:
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    tris = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TriMesh(PointCloud.from_points(pts), tris)


def unit_cube() -> TriMesh:
    pts = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)],
                   float)
    # 12 outward-oriented triangles (two per face)
    quads = [
        (0, 1, 3, 2),  # x = 0, normal -x
        (4, 6, 7, 5),  # x = 1, normal +x
        (0, 4, 5, 1),  # y = 0, normal -y
        (2, 3, 7, 6),  # y = 1, normal +y
        (0, 2, 6, 4),  # z = 0, normal -z
        (1, 5, 7, 3),  # z = 1, normal +z
    ]
    tris = []
    for (a, b, c, d) in quads:
        tris += [(a, b, c), (a, c, d)]
    return TriMesh(PointCloud.from_points(pts), np.array(tris))


def tetra_volume_det(mesh_or_pts) -> float:
    """Independent oracle: volume of a tetrahedron by determinant."""
    pts = mesh_or_pts.cloud.points if isinstance(mesh_or_pts, TriMesh) else np.asarray(mesh_or_pts)
    v0, v1, v2, v3 = pts[:4]
    return abs(np.linalg.det(np.stack([v1 - v0, v2 - v0, v3 - v0]))) / 6.0


def volume_by_apex_decomposition(mesh: TriMesh, apex) -> float:
    """Independent oracle: sum of signed tetra volumes from an interior apex."""
    apex = np.asarray(apex, float)
    a, b, c = mesh.triangle_corners()
    vols = np.einsum("ij,ij->i", a - apex, np.cross(b - apex, c - apex)) / 6.0
    return float(vols.sum())
