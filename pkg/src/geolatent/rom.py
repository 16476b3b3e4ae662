"""Non-intrusive ROM regressors and their leave-one-out error report.

Errors are the range-normalized leave-one-out residual statistics: each
held-out residual |q_i - M_-i(x_i)| is divided by |max q - min q| over the
full dataset; max_error and mean_error aggregate them. Timing wraps the
whole LOO computation and averages over repetitions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels

ROM_KINDS = ("gpr", "rbf", "tree")

_GPR_SCALE_GRID = (0.1, 0.3, 1.0, 3.0)


def _median_pairwise(X: np.ndarray) -> float:
    d2 = kernels.sq_dists(X, X)
    iu = np.triu_indices(X.shape[0], k=1)
    med = np.sqrt(np.median(d2[iu])) if iu[0].size else 1.0
    return med if med > 0 else 1.0


class GprRegressor:
    """Zero-mean GP posterior mean with a squared-exponential kernel.

    The length scale is picked from a coarse grid (multiples of the median
    pairwise distance) by closed-form leave-one-out error on the training
    set; the noise default keeps the fit at near-interpolation.
    """

    def __init__(self, length_scale: float | None = None, noise: float = 1e-8):
        self.length_scale = length_scale
        self.noise = noise
        self._X = None
        self._alpha = None

    def _kernel(self, A, B, ls):
        return np.exp(-kernels.sq_dists(A, B) / (2.0 * ls * ls))

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GprRegressor":
        X = np.atleast_2d(np.asarray(X, float))
        y = np.asarray(y, float).reshape(-1)
        scales = ([self.length_scale] if self.length_scale is not None
                  else [f * _median_pairwise(X) for f in _GPR_SCALE_GRID])
        best = (np.inf, None, None)
        for ls in scales:
            K = self._kernel(X, X, ls) + self.noise * np.eye(len(y))
            try:
                Kinv = np.linalg.inv(K)
            except np.linalg.LinAlgError:
                continue
            alpha = Kinv @ y
            # closed-form LOO residuals of a GP mean: alpha_i / Kinv_ii
            loo = alpha / np.diag(Kinv)
            score = float((loo ** 2).mean())
            if score < best[0]:
                best = (score, ls, alpha)
        if best[1] is None:
            raise np.linalg.LinAlgError("kernel matrix singular for all scales")
        _, self._ls, self._alpha = best
        self._X = X
        return self

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, float))
        return self._kernel(Xq, self._X, self._ls) @ self._alpha


class RbfInterpolator:
    """Exact Gaussian-kernel interpolation; shape parameter from the median
    pairwise distance, jitter escalated until the system factorizes."""

    def __init__(self, shape_parameter: float | None = None):
        self.shape_parameter = shape_parameter

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RbfInterpolator":
        X = np.atleast_2d(np.asarray(X, float))
        y = np.asarray(y, float).reshape(-1)
        eps = (self.shape_parameter if self.shape_parameter is not None
               else 1.0 / _median_pairwise(X))
        Phi = np.exp(-(eps ** 2) * kernels.sq_dists(X, X))
        jitter = 0.0
        for _ in range(6):
            try:
                self._w = np.linalg.solve(Phi + jitter * np.eye(len(y)), y)
                break
            except np.linalg.LinAlgError:
                jitter = max(jitter * 100.0, 1e-12)
        else:
            raise np.linalg.LinAlgError("RBF system singular after jitter escalation")
        self._X, self._eps = X, eps
        return self

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, float))
        return np.exp(-(self._eps ** 2) * kernels.sq_dists(Xq, self._X)) @ self._w


class TreeRegressor:
    """CART regression tree with variance-reduction splits."""

    def __init__(self, max_depth: int = 8, min_leaf: int = 1):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X: np.ndarray, y: np.ndarray) -> "TreeRegressor":
        X = np.atleast_2d(np.asarray(X, float))
        y = np.asarray(y, float).reshape(-1)
        self._tree = self._build(X, y, depth=0)
        return self

    def _build(self, X, y, depth):
        if depth >= self.max_depth or y.size < 2 * self.min_leaf or np.ptp(y) == 0.0:
            return (None, float(y.mean()))
        best = None  # (sse, feature, threshold)
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs, ys = X[order, j], y[order]
            csum = np.cumsum(ys)
            csq = np.cumsum(ys ** 2)
            total, total_sq = csum[-1], csq[-1]
            for i in range(self.min_leaf, y.size - self.min_leaf + 1):
                if xs[i - 1] == xs[i]:
                    continue
                left_sse = csq[i - 1] - csum[i - 1] ** 2 / i
                rn = y.size - i
                right_sse = (total_sq - csq[i - 1]) - (total - csum[i - 1]) ** 2 / rn
                sse = left_sse + right_sse
                if best is None or sse < best[0]:
                    best = (sse, j, 0.5 * (xs[i - 1] + xs[i]))
        if best is None:
            return (None, float(y.mean()))
        _, j, thr = best
        mask = X[:, j] <= thr
        if mask.all() or not mask.any():
            return (None, float(y.mean()))
        left = self._build(X[mask], y[mask], depth + 1)
        right = self._build(X[~mask], y[~mask], depth + 1)
        return ((j, thr), (left, right))

    def _predict_one(self, x):
        node = self._tree
        while node[0] is not None:
            (j, thr), (left, right) = node
            node = left if x[j] <= thr else right
        return node[1]

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        Xq = np.atleast_2d(np.asarray(Xq, float))
        return np.array([self._predict_one(x) for x in Xq])


def make_regressor(kind: str, **hyper):
    if kind == "gpr":
        return GprRegressor(**hyper)
    if kind == "rbf":
        return RbfInterpolator(**hyper)
    if kind == "tree":
        return TreeRegressor(**hyper)
    raise ValueError(f"unknown ROM kind {kind!r}; choose from {ROM_KINDS}")


def fit_predict(kind: str, X: np.ndarray, y: np.ndarray, x_query,
                **hyper) -> float:
    """Fit the named regressor on (X, y) and predict one query point."""
    if np.atleast_2d(X).shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    model = make_regressor(kind, **hyper).fit(X, y)
    return float(model.predict(np.atleast_2d(x_query))[0])


@dataclass
class LooReport:
    kind: str
    max_error: float
    mean_error: float
    cpu_time_seconds: float
    residuals: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.mean_error > self.max_error + 1e-15:
            raise ValueError("mean_error exceeds max_error")


def _loo_errors(kind: str, X: np.ndarray, y: np.ndarray, hyper: dict):
    m = y.size
    rng_range = np.max(y) - np.min(y)
    preds = np.empty(m)
    idx = np.arange(m)
    for i in range(m):
        keep = idx != i
        model = make_regressor(kind, **hyper).fit(X[keep], y[keep])
        preds[i] = model.predict(X[i:i + 1])[0]
    residuals = np.abs(y - preds) / abs(rng_range)
    return residuals


def loo_evaluate(kind: str, X: np.ndarray, y: np.ndarray,
                 repetitions: int = 10, **hyper) -> LooReport:
    """Leave-one-out errors plus the wall time of the full computation,
    averaged over `repetitions` timing runs."""
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(y, float).reshape(-1)
    if y.size < 3:
        raise ValueError("need at least 3 samples for leave-one-out scoring")
    if np.max(y) == np.min(y):
        raise ValueError("quantity of interest has zero range")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    times = np.empty(repetitions)
    for r in range(repetitions):
        t0 = time.perf_counter()
        residuals = _loo_errors(kind, X, y, hyper)
        times[r] = time.perf_counter() - t0
    return LooReport(kind=kind, max_error=float(residuals.max()),
                     mean_error=float(residuals.mean()),
                     cpu_time_seconds=float(times.mean()),
                     residuals=residuals)


def compare_parametrizations(datasets: dict, kinds=ROM_KINDS,
                             repetitions: int = 10) -> list[dict]:
    """LOO report per (kind, parametrization).

    datasets maps a parametrization name to an (X, y) pair; rows with equal
    y vectors correspond to coinciding clouds.
    """
    rows = []
    for kind in kinds:
        for name, (X, y) in datasets.items():
            rep = loo_evaluate(kind, X, y, repetitions=repetitions)
            rows.append({"kind": kind, "parametrization": name,
                         "max_error": rep.max_error, "mean_error": rep.mean_error,
                         "cpu_time_s": rep.cpu_time_seconds})
    return rows
