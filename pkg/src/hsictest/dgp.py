"""Simulation processes for functional time series on a grid.

Every iterative generator starts from zero curves and drops ``burn_in``
leading curves. All random draws for a call are made up front in a fixed
order, so a run with ``burn_in=b`` equals the tail of a run with
``burn_in=0`` and ``n + b`` curves.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, LinAlgError

from .errors import ConfigurationError, NumericalError
from .grid import FunctionalSample, Grid, norm

__all__ = [
    "IntegralOperator",
    "wiener",
    "gp_exp_cov",
    "exp_cov_matrix",
    "min_kernel_operator",
    "MinKernelOperator",
    "har1",
    "setar",
    "threshold_sign",
    "fgarch",
    "concurrent_regression",
    "CONCURRENT_DGPS",
    "BURN_IN",
]

BURN_IN = 100

# DGP number -> (linear, nonlinear, heteroscedastic) switches
CONCURRENT_DGPS = {1: (0, 0, 0), 2: (1, 0, 0), 3: (0, 1, 0), 4: (0, 0, 1)}


@dataclass(frozen=True, eq=False)
class IntegralOperator:
    """``f -> sum_k kernel[:, k] * weights[k] * f[k]`` on grid values."""

    kernel: np.ndarray
    grid: Grid

    @property
    def matrix(self) -> np.ndarray:
        return self.kernel * self.grid.weights[None, :]

    def __call__(self, f: np.ndarray) -> np.ndarray:
        # works row-wise for a stack of curves
        return (np.asarray(f) * self.grid.weights) @ self.kernel.T

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True, eq=False)
class MinKernelOperator(IntegralOperator):
    """Kernel gamma * min(t, t'), applied in O(m) with cumulative sums."""

    gamma: float = 0.0

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        t, w = self.grid.points, self.grid.weights
        wf = w * f
        # sum_{k<=l} w_k t_k f_k + t_l * sum_{k>l} w_k f_k
        below = np.cumsum(wf * t, axis=-1)
        above = np.sum(wf, axis=-1, keepdims=True) - np.cumsum(wf, axis=-1)
        return self.gamma * (below + t * above)


def min_kernel_operator(gamma: float, grid: Grid) -> IntegralOperator:
    t = grid.points
    return MinKernelOperator(gamma * np.minimum.outer(t, t), grid, float(gamma))


def _wiener_paths(grid: Grid, rng: np.random.Generator, size: int) -> np.ndarray:
    t = grid.points
    steps = np.diff(np.concatenate(([0.0], t)))
    inc = rng.standard_normal((size, len(t))) * np.sqrt(steps)
    inc[:, steps == 0] = 0.0  # avoid -0.0 at t = 0
    return np.cumsum(inc, axis=1)


def wiener(grid: Grid, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Standard Brownian motion on the grid points (one curve, or ``size`` rows)."""
    paths = _wiener_paths(grid, rng, 1 if size is None else size)
    return paths[0] if size is None else paths


def exp_cov_matrix(points) -> np.ndarray:
    t = np.asarray(points, dtype=np.float64)
    return np.exp(-np.abs(t[:, None] - t[None, :]) / 2)


@lru_cache(maxsize=8)
def _exp_cov_factor(points_bytes: bytes) -> np.ndarray:
    t = np.frombuffer(points_bytes, dtype=np.float64)
    cov = exp_cov_matrix(t)
    try:
        return cholesky(cov, lower=True)
    except LinAlgError:
        pass
    jitter = 1e-10
    while jitter <= 1e-6:
        try:
            return cholesky(cov + jitter * np.eye(len(t)), lower=True)
        except LinAlgError:
            jitter *= 10
    raise NumericalError("covariance factorization failed after jitter 1e-6")


def gp_exp_cov(grid: Grid, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Centered Gaussian curves with covariance exp(-|t - t'| / 2)."""
    L = _exp_cov_factor(grid.points.tobytes())
    z = rng.standard_normal((1 if size is None else size, grid.m))
    out = z @ L.T
    return out[0] if size is None else out


def har1(gamma1: float, n: int, grid: Grid, rng: np.random.Generator, burn_in: int = BURN_IN) -> FunctionalSample:
    """Hilbertian AR(1) with operator kernel gamma1 * min(t, t') and Wiener noise."""
    _check_n(n, burn_in)
    total = n + burn_in
    eps = _wiener_paths(grid, rng, total)
    op = min_kernel_operator(gamma1, grid)
    out = np.empty((total, grid.m))
    prev = np.zeros(grid.m)
    for i in range(total):
        prev = op(prev) + eps[i] if gamma1 != 0 else eps[i]
        out[i] = prev
    return FunctionalSample(out[burn_in:], grid)


def threshold_sign(curve, grid: Grid, threshold: float = 1.0) -> float:
    """+1 when the curve's L2 norm is at most ``threshold``, else -1."""
    return 1.0 if norm(curve, grid) <= threshold else -1.0


def setar(n: int, grid: Grid, rng: np.random.Generator, burn_in: int = BURN_IN,
          gamma: float = 1.5, threshold: float = 1.0) -> FunctionalSample:
    """Self-exciting threshold AR on lag 2: the operator sign flips when the lag-2 norm exceeds 1."""
    _check_n(n, burn_in)
    total = n + burn_in
    eps = _wiener_paths(grid, rng, total)
    op = min_kernel_operator(gamma, grid)
    out = np.empty((total + 2, grid.m))
    out[:2] = 0.0
    for i in range(2, total + 2):
        lagged = out[i - 2]
        out[i] = threshold_sign(lagged, grid, threshold) * op(lagged) + eps[i - 2]
    return FunctionalSample(out[2 + burn_in:], grid)


def _fgarch_paths(n: int, grid: Grid, rng: np.random.Generator, burn_in: int):
    total = n + burn_in
    errors = gp_exp_cov(grid, rng, size=total)
    t, w = grid.points, grid.weights
    a = (t - 0.5) ** 2
    x = np.empty((total, grid.m))
    sig2 = np.empty((total, grid.m))
    x_prev = np.zeros(grid.m)
    s_prev = np.zeros(grid.m)
    for i in range(total):
        # int (c + a(t) + a(t')) f(t) dt = (c + a(t')) * int f + int a f
        x2 = x_prev**2
        s = (0.1 + a
             + (0.2 + a) * np.dot(w, x2) + np.dot(w, a * x2)
             + (0.4 + a) * np.dot(w, s_prev) + np.dot(w, a * s_prev))
        x_prev = np.sqrt(s) * errors[i]
        s_prev = s
        x[i] = x_prev
        sig2[i] = s
    return x[burn_in:], sig2[burn_in:]


def fgarch(n: int, grid: Grid, rng: np.random.Generator, burn_in: int = BURN_IN,
           return_volatility: bool = False):
    """Functional GARCH(1, 1) driven by exp(-|t - t'|/2) Gaussian errors."""
    _check_n(n, burn_in)
    x, sig2 = _fgarch_paths(n, grid, rng, burn_in)
    sample = FunctionalSample(x, grid)
    return (sample, sig2) if return_volatility else sample


def concurrent_regression(g2: int, g3: int, g4: int, n: int, grid: Grid, rng: np.random.Generator,
                          burn_in: int = BURN_IN) -> tuple[FunctionalSample, FunctionalSample]:
    """Pointwise regression of Y on a functional GARCH regressor X.

    The flags switch X into the linear, sine and heteroscedastic terms; when
    a flag is 0 that term uses an independent GARCH copy instead.
    """
    for g in (g2, g3, g4):
        if g not in (0, 1):
            raise ConfigurationError("concurrent regression flags must be 0 or 1")
    _check_n(n, burn_in)
    xs = [_fgarch_paths(n, grid, rng, burn_in)[0] for _ in range(4)]
    x, x1, x2, x3 = xs
    e_y = gp_exp_cov(grid, rng, size=n)
    y = ((g2 * x + (1 - g2) * x1) / 3
         + 2 * (g3 * np.sin(2 * x) + (1 - g3) * np.sin(2 * x2))
         + (g4 * x + (1 - g4) * x3) * e_y)
    return FunctionalSample(x, grid), FunctionalSample(y, grid)


def _check_n(n: int, burn_in: int):
    if n < 1:
        raise ConfigurationError("sample size must be >= 1")
    if burn_in < 0:
        raise ConfigurationError("burn_in must be >= 0")
