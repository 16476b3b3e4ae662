"""Pure-numpy implementations of the hot kernels.

Signature-compatible with ``_kernels_numba``; arrays are float64/int64 and
C-contiguous. These are the fallback path and the reference the numba
versions are tested against.
"""

import numpy as np

_BLOCK = 512  # point-chunk size for the O(P*T) geometry kernels


def _gather(idx, vals):
    # vals[idx] with idx == -1 meaning "absent factor" (contributes 1.0)
    out = np.where(idx >= 0, vals[np.clip(idx, 0, None)], 1.0)
    return out


def ml_eval(coef, xi, yi, zi, comp, x, y, z, n_comp):
    """Evaluate a sum-of-monomials multilinear functional."""
    prod = coef * _gather(xi, x) * _gather(yi, y) * _gather(zi, z)
    return np.bincount(comp, weights=prod, minlength=n_comp).astype(np.float64)


def ml_restrict(coef, xi, yi, zi, comp, x, y, z, n_comp, block):
    """Affine restriction to one coordinate block.

    Returns (A, b0) with A @ block_coords + b0 == ml_eval(...). block is
    0 for x, 1 for y, 2 for z.
    """
    npts = x.shape[0]
    if block == 0:
        own, f1, f2 = xi, _gather(yi, y), _gather(zi, z)
    elif block == 1:
        own, f1, f2 = yi, _gather(xi, x), _gather(zi, z)
    else:
        own, f1, f2 = zi, _gather(xi, x), _gather(yi, y)
    w = coef * f1 * f2
    has = own >= 0
    A = np.zeros(n_comp * npts)
    np.add.at(A, comp[has] * npts + own[has], w[has])
    own_vals = (x, y, z)[block]
    b0 = np.bincount(comp[~has], weights=w[~has] * _gather(own, own_vals)[~has],
                     minlength=n_comp)
    return A.reshape(n_comp, npts), b0.astype(np.float64)


def ffd_eval(pts, box_min, box_max, ctrl, binos):
    """Trilinear Bernstein FFD of pts by displaced control positions ctrl.

    ctrl has shape (L, M, N, 3); binos is the (L, M, N) binomial coefficient
    table binom(L-1,i)*binom(M-1,j)*binom(N-1,k). Points outside the box pass
    through unchanged.
    """
    L, M, N, _ = ctrl.shape
    ext = box_max - box_min
    loc = (pts - box_min) / ext
    inside = np.all((loc >= 0.0) & (loc <= 1.0), axis=1)
    s, t, u = loc[inside, 0], loc[inside, 1], loc[inside, 2]

    def bern(v, deg):
        i = np.arange(deg + 1)
        return v[:, None] ** i * (1.0 - v[:, None]) ** (deg - i)

    Bs = bern(s, L - 1)
    Bt = bern(t, M - 1)
    Bu = bern(u, N - 1)
    wctrl = binos[..., None] * ctrl
    out = pts.copy()
    out[inside] = np.einsum("pi,pj,pk,ijkc->pc", Bs, Bt, Bu, wctrl, optimize=True)
    return out


def signed_volume(verts, tris):
    """Signed volume of a triangulated surface (divergence-theorem sum)."""
    xi, yi, zi = verts[tris[:, 0], 0], verts[tris[:, 0], 1], verts[tris[:, 0], 2]
    xj, yj, zj = verts[tris[:, 1], 0], verts[tris[:, 1], 1], verts[tris[:, 1], 2]
    xk, yk, zk = verts[tris[:, 2], 0], verts[tris[:, 2], 1], verts[tris[:, 2], 2]
    terms = (-xk * yj * zi + xj * yk * zi + xk * yi * zj
             - xi * yk * zj - xj * yi * zk + xi * yj * zk)
    return float(terms.sum() / 6.0)


def inside_mesh(pts, tv0, tv1, tv2):
    """Ray-parity inside test: parity of +x ray crossings per point."""
    P = pts.shape[0]
    out = np.zeros(P, dtype=np.bool_)
    e1 = tv1 - tv0
    e2 = tv2 - tv0
    # Moller-Trumbote with fixed direction d = (1,0,0):
    # h = d x e2 = (0, -e2z, e2y); a = e1 . h
    hy = -e2[:, 2]
    hz = e2[:, 1]
    a = e1[:, 1] * hy + e1[:, 2] * hz
    ok = np.abs(a) > 1e-300
    inv_a = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
    for lo in range(0, P, _BLOCK):
        p = pts[lo:lo + _BLOCK]
        s = p[:, None, :] - tv0[None, :, :]
        u = (s[:, :, 1] * hy + s[:, :, 2] * hz) * inv_a
        # q = s x e1
        qx = s[:, :, 1] * e1[:, 2] - s[:, :, 2] * e1[:, 1]
        qy = s[:, :, 2] * e1[:, 0] - s[:, :, 0] * e1[:, 2]
        qz = s[:, :, 0] * e1[:, 1] - s[:, :, 1] * e1[:, 0]
        v = qx * inv_a
        t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv_a
        hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
        out[lo:lo + _BLOCK] = (hit.sum(axis=1) % 2).astype(np.bool_)
    return out


def chamfer(a, b):
    """Symmetric mean nearest-neighbor distance between two point sets."""
    def one_way(p, q):
        best = np.full(p.shape[0], np.inf)
        for lo in range(0, q.shape[0], _BLOCK):
            d2 = ((p[:, None, :] - q[None, lo:lo + _BLOCK, :]) ** 2).sum(axis=2)
            best = np.minimum(best, d2.min(axis=1))
        return np.sqrt(best).mean()

    return 0.5 * (one_way(a, b) + one_way(b, a))


def sq_dists(X, Y):
    """Pairwise squared Euclidean distances, (m, q)."""
    xx = (X * X).sum(axis=1)[:, None]
    yy = (Y * Y).sum(axis=1)[None, :]
    d2 = xx + yy - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2
