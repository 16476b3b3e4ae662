"""Numba and numpy kernel paths must agree; the env flag picks the backend."""

import numpy as np
import pytest

from geolatent import _kernels_numpy as knp
from geolatent import rng

try:
    from geolatent import _kernels_numba as knb
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")


def _random_functional(g, n_pts=11, n_terms=60, n_comp=2):
    coef = g.standard_normal(n_terms)
    def idx():
        raw = g.integers(-1, n_pts, n_terms)
        return raw.astype(np.int64)
    comp = g.integers(0, n_comp, n_terms).astype(np.int64)
    return coef, idx(), idx(), idx(), comp


def test_ml_eval_and_restrict_agree():
    g = rng.stream(7, "kernel-ml")
    for _ in range(5):
        coef, xi, yi, zi, comp = _random_functional(g)
        x, y, z = g.standard_normal((3, 11))
        a = knp.ml_eval(coef, xi, yi, zi, comp, x, y, z, 2)
        b = knb.ml_eval(coef, xi, yi, zi, comp, x, y, z, 2)
        np.testing.assert_allclose(a, b, rtol=1e-13)
        for block in (0, 1, 2):
            Anp, bnp = knp.ml_restrict(coef, xi, yi, zi, comp, x, y, z, 2, block)
            Anb, bnb = knb.ml_restrict(coef, xi, yi, zi, comp, x, y, z, 2, block)
            np.testing.assert_allclose(Anp, Anb, rtol=1e-13, atol=1e-15)
            np.testing.assert_allclose(bnp, bnb, rtol=1e-13, atol=1e-15)


def test_ffd_eval_agree():
    g = rng.stream(8, "kernel-ffd")
    pts = g.uniform(-0.2, 1.2, (200, 3))  # some points outside the box
    ctrl = g.standard_normal((3, 4, 2, 3)) * 0.1 + np.stack(
        np.meshgrid(np.linspace(0, 1, 3), np.linspace(0, 1, 4),
                    np.linspace(0, 1, 2), indexing="ij"), axis=-1)
    binos = np.ones((3, 4, 2))
    binos[1, :, :] *= 2
    binos[:, 1:3, :] *= 3
    a = knp.ffd_eval(pts, np.zeros(3), np.ones(3), ctrl, binos)
    b = knb.ffd_eval(pts, np.zeros(3), np.ones(3), ctrl, binos)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


def test_volume_inside_chamfer_sqdist_agree():
    from geolatent.geometry import make_icosphere

    g = rng.stream(9, "kernel-geo")
    mesh = make_icosphere(2)
    tv0, tv1, tv2 = mesh.triangle_corners()
    assert knp.signed_volume(mesh.cloud.points, mesh.triangles) == pytest.approx(
        knb.signed_volume(mesh.cloud.points, mesh.triangles), rel=1e-13)

    pts = np.ascontiguousarray(g.uniform(-1.2, 1.2, (300, 3)))
    np.testing.assert_array_equal(knp.inside_mesh(pts, tv0, tv1, tv2),
                                  knb.inside_mesh(pts, tv0, tv1, tv2))

    a = np.ascontiguousarray(g.standard_normal((80, 3)))
    b = np.ascontiguousarray(g.standard_normal((70, 3)))
    assert knp.chamfer(a, b) == pytest.approx(knb.chamfer(a, b), rel=1e-12)

    X = g.standard_normal((30, 5))
    Y = g.standard_normal((20, 5))
    np.testing.assert_allclose(knp.sq_dists(X, Y), knb.sq_dists(X, Y),
                               rtol=1e-12, atol=1e-12)


def test_inside_mesh_matches_radius_oracle():
    from geolatent.geometry import make_icosphere

    g = rng.stream(10, "kernel-inside")
    mesh = make_icosphere(3)
    tv0, tv1, tv2 = mesh.triangle_corners()
    pts = np.ascontiguousarray(g.uniform(-1.3, 1.3, (500, 3)))
    got = knp.inside_mesh(pts, tv0, tv1, tv2)
    r = np.linalg.norm(pts, axis=1)
    # surface sits between the face inradius (~0.99 at this subdivision) and 1
    assert got[r < 0.9].all()
    assert not got[r > 1.001].any()


def test_env_flag_selects_numpy(monkeypatch):
    import importlib
    import geolatent._accel as accel

    monkeypatch.setenv("GEOLATENT_DISABLE_NUMBA", "1")
    mod = importlib.reload(accel)
    assert mod.USING_NUMBA is False
    monkeypatch.delenv("GEOLATENT_DISABLE_NUMBA")
    importlib.reload(accel)
