"""Numba njit implementations of the hot kernels (see _kernels_numpy)."""

import numpy as np
from numba import njit

_OPTS = dict(cache=True, fastmath=False)


@njit(**_OPTS)
def ml_eval(coef, xi, yi, zi, comp, x, y, z, n_comp):
    out = np.zeros(n_comp)
    for t in range(coef.shape[0]):
        p = coef[t]
        if xi[t] >= 0:
            p *= x[xi[t]]
        if yi[t] >= 0:
            p *= y[yi[t]]
        if zi[t] >= 0:
            p *= z[zi[t]]
        out[comp[t]] += p
    return out


@njit(**_OPTS)
def ml_restrict(coef, xi, yi, zi, comp, x, y, z, n_comp, block):
    npts = x.shape[0]
    A = np.zeros((n_comp, npts))
    b0 = np.zeros(n_comp)
    for t in range(coef.shape[0]):
        if block == 0:
            own = xi[t]
            w = coef[t]
            if yi[t] >= 0:
                w *= y[yi[t]]
            if zi[t] >= 0:
                w *= z[zi[t]]
            own_val = x[own] if own >= 0 else 1.0
        elif block == 1:
            own = yi[t]
            w = coef[t]
            if xi[t] >= 0:
                w *= x[xi[t]]
            if zi[t] >= 0:
                w *= z[zi[t]]
            own_val = y[own] if own >= 0 else 1.0
        else:
            own = zi[t]
            w = coef[t]
            if xi[t] >= 0:
                w *= x[xi[t]]
            if yi[t] >= 0:
                w *= y[yi[t]]
            own_val = z[own] if own >= 0 else 1.0
        if own >= 0:
            A[comp[t], own] += w
        else:
            b0[comp[t]] += w * own_val
    return A, b0


@njit(**_OPTS)
def ffd_eval(pts, box_min, box_max, ctrl, binos):
    L, M, N, _ = ctrl.shape
    P = pts.shape[0]
    out = pts.copy()
    Bs = np.empty(L)
    Bt = np.empty(M)
    Bu = np.empty(N)
    for p in range(P):
        s = (pts[p, 0] - box_min[0]) / (box_max[0] - box_min[0])
        t = (pts[p, 1] - box_min[1]) / (box_max[1] - box_min[1])
        u = (pts[p, 2] - box_min[2]) / (box_max[2] - box_min[2])
        if s < 0.0 or s > 1.0 or t < 0.0 or t > 1.0 or u < 0.0 or u > 1.0:
            continue
        for i in range(L):
            Bs[i] = s ** i * (1.0 - s) ** (L - 1 - i)
        for j in range(M):
            Bt[j] = t ** j * (1.0 - t) ** (M - 1 - j)
        for k in range(N):
            Bu[k] = u ** k * (1.0 - u) ** (N - 1 - k)
        ax = ay = az = 0.0
        for i in range(L):
            for j in range(M):
                for k in range(N):
                    w = binos[i, j, k] * Bs[i] * Bt[j] * Bu[k]
                    ax += w * ctrl[i, j, k, 0]
                    ay += w * ctrl[i, j, k, 1]
                    az += w * ctrl[i, j, k, 2]
        out[p, 0] = ax
        out[p, 1] = ay
        out[p, 2] = az
    return out


@njit(**_OPTS)
def signed_volume(verts, tris):
    acc = 0.0
    for h in range(tris.shape[0]):
        i, j, k = tris[h, 0], tris[h, 1], tris[h, 2]
        xi_, yi_, zi_ = verts[i, 0], verts[i, 1], verts[i, 2]
        xj_, yj_, zj_ = verts[j, 0], verts[j, 1], verts[j, 2]
        xk_, yk_, zk_ = verts[k, 0], verts[k, 1], verts[k, 2]
        acc += (-xk_ * yj_ * zi_ + xj_ * yk_ * zi_ + xk_ * yi_ * zj_
                - xi_ * yk_ * zj_ - xj_ * yi_ * zk_ + xi_ * yj_ * zk_)
    return acc / 6.0


@njit(**_OPTS)
def inside_mesh(pts, tv0, tv1, tv2):
    P = pts.shape[0]
    T = tv0.shape[0]
    out = np.zeros(P, dtype=np.bool_)
    for p in range(P):
        crossings = 0
        ox, oy, oz = pts[p, 0], pts[p, 1], pts[p, 2]
        for h in range(T):
            e1x = tv1[h, 0] - tv0[h, 0]
            e1y = tv1[h, 1] - tv0[h, 1]
            e1z = tv1[h, 2] - tv0[h, 2]
            e2x = tv2[h, 0] - tv0[h, 0]
            e2y = tv2[h, 1] - tv0[h, 1]
            e2z = tv2[h, 2] - tv0[h, 2]
            # ray direction (1,0,0): h = d x e2 = (0, -e2z, e2y)
            a = e1y * (-e2z) + e1z * e2y
            if abs(a) < 1e-300:
                continue
            f = 1.0 / a
            sx = ox - tv0[h, 0]
            sy = oy - tv0[h, 1]
            sz = oz - tv0[h, 2]
            u = f * (sy * (-e2z) + sz * e2y)
            if u < 0.0 or u > 1.0:
                continue
            qx = sy * e1z - sz * e1y
            qy = sz * e1x - sx * e1z
            qz = sx * e1y - sy * e1x
            v = f * qx
            if v < 0.0 or u + v > 1.0:
                continue
            t = f * (e2x * qx + e2y * qy + e2z * qz)
            if t > 0.0:
                crossings += 1
        out[p] = (crossings % 2) == 1
    return out


@njit(**_OPTS)
def chamfer(a, b):
    def one_way(p, q):
        acc = 0.0
        for i in range(p.shape[0]):
            best = np.inf
            for j in range(q.shape[0]):
                dx = p[i, 0] - q[j, 0]
                dy = p[i, 1] - q[j, 1]
                dz = p[i, 2] - q[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < best:
                    best = d2
            acc += np.sqrt(best)
        return acc / p.shape[0]

    return 0.5 * (one_way(a, b) + one_way(b, a))


@njit(**_OPTS)
def sq_dists(X, Y):
    m, p = X.shape
    q = Y.shape[0]
    out = np.empty((m, q))
    for i in range(m):
        for j in range(q):
            acc = 0.0
            for d in range(p):
                diff = X[i, d] - Y[j, d]
                acc += diff * diff
            out[i, j] = acc
    return out
