"""Gaussian wild bootstrap with moving-average multipliers.

The multiplier series is a normalized triangular moving average of i.i.d.
standard normals, so neighbouring multipliers within ``l`` steps are
correlated and those ``l`` or more apart are independent.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError, DimensionError
from .grid import FunctionalSample
from .hsic import KernelsLike, _q_terms, centered_grams, resolve_kernels
from .kernels import double_center

__all__ = [
    "MultiplierConfig",
    "TestReport",
    "ma_weights",
    "ma_autocovariance",
    "draw_multipliers",
    "hsic_star",
    "hsic_star_batch",
    "hsic_q_star",
    "block_length",
    "parse_block_rule",
    "bootstrap_quantile",
    "wild_bootstrap_test",
    "make_rng",
]

Seed = Union[int, Sequence[int]]


def make_rng(seed: Seed) -> np.random.Generator:
    """Generator for an integer seed or a tuple of integers (a substream key)."""
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(int(seed))
    return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))


@dataclass(frozen=True)
class MultiplierConfig:
    l: int = 1
    n_b: int = 1000
    seed: Seed = 0

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ConfigurationError(f"block length must be a positive integer, got {self.l}")
        if int(self.n_b) != self.n_b or self.n_b < 1:
            raise ConfigurationError(f"n_b must be a positive integer, got {self.n_b}")


def ma_weights(l: int) -> np.ndarray:
    k = np.arange(1, l + 1, dtype=np.float64)
    delta = 0.5 - np.abs((k - 0.5) / l - 0.5)
    return delta / np.sqrt(np.sum(delta**2))


def ma_autocovariance(l: int, h: int) -> float:
    """Exact lag-h autocovariance of the multiplier process."""
    w = ma_weights(l)
    h = abs(h)
    if h >= l:
        return 0.0
    return float(np.dot(w[: l - h], w[h:]))


def draw_multipliers(n: int, l: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Multiplier series of length n; with ``size`` an array of shape (size, n).

    Innovations run from index 2 - l to n, so every entry averages a full
    window and the series is stationary from its first value.
    """
    if n < 1:
        raise DimensionError("need n >= 1 multipliers")
    w = ma_weights(l)
    rows = 1 if size is None else size
    eps = rng.standard_normal((rows, n + l - 1))
    r = np.zeros((rows, n))
    for k in range(1, l + 1):
        r += w[k - 1] * eps[:, l - k : l - k + n]
    return r[0] if size is None else r


def hsic_star(gc_x, gc_y, r) -> float:
    gc_x = np.asarray(gc_x, dtype=np.float64)
    gc_y = np.asarray(gc_y, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if gc_x.shape != gc_y.shape or gc_x.shape != (len(r), len(r)):
        raise DimensionError("multipliers and Gram matrices do not conform")
    return float(hsic_star_batch(gc_x * gc_y, r[None, :])[0])


def hsic_star_batch(product: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Bootstrap HSIC values for each row of R given ``Gc_x * Gc_y``."""
    n = product.shape[0]
    R = R - R[:, :1]  # shift first so constant rows center to exact zeros
    Rc = R - R.mean(axis=1, keepdims=True)
    return np.einsum("bi,bi->b", Rc @ product, Rc) / n**2


def hsic_q_star(grams: Sequence[np.ndarray], r, form: str = "expansion") -> float:
    """Bootstrap analogue of the q-variable statistic.

    ``form="expansion"`` evaluates the three-term multiplier expansion term
    by term on uncentered Grams. ``form="centered"`` weights the product of
    double-centered Grams, ``(1/n^2) rc' (Kc_1 * ... * Kc_q) rc``, which is
    the pairwise bootstrap statistic when q = 2.
    """
    K = _q_terms(grams)
    n = K.shape[1]
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (n,):
        raise DimensionError("multipliers and Gram matrices do not conform")
    rc = r - r[0]
    rc = rc - rc.mean()
    if form == "centered":
        prod = np.prod([double_center(k) for k in K], axis=0)
        return float(rc @ prod @ rc) / n**2
    if form != "expansion":
        raise ConfigurationError(f"unknown form {form!r}")
    outer = np.outer(rc, rc)
    term1 = np.sum(outer * np.prod(K, axis=0)) / n**2
    term2 = 2.0 / n * np.sum(rc * np.prod(K @ rc / n, axis=0))
    term3 = np.prod([np.sum(outer * k) / n**2 for k in K])
    return float(term1 - term2 + term3)


def parse_block_rule(rule: str) -> tuple[str, float]:
    """``fixed:<k>`` or ``scaled:<c>`` (a bare integer means fixed)."""
    text = str(rule).strip().lower()
    kind, _, arg = text.partition(":")
    if not arg:
        kind, arg = "fixed", kind
    try:
        value = float(arg)
    except ValueError:
        raise ConfigurationError(f"bad block-length rule {rule!r}") from None
    if kind == "fixed":
        if value != int(value) or value < 1:
            raise ConfigurationError(f"fixed block length must be a positive integer: {rule!r}")
        return "fixed", int(value)
    if kind == "scaled":
        if not value > 0:
            raise ConfigurationError(f"scaled block-length constant must be positive: {rule!r}")
        return "scaled", value
    raise ConfigurationError(f"unknown block-length rule {rule!r}")


def block_length(rule, n: int) -> int:
    """Resolve a rule to an integer; scaled(c) is c * n^(1/5) rounded half up, at least 1."""
    kind, value = parse_block_rule(rule) if isinstance(rule, str) else rule
    if kind == "fixed":
        return int(value)
    return max(1, math.floor(value * n ** 0.2 + 0.5))


def bootstrap_quantile(replicates, alpha: float) -> float:
    """Order statistic of rank ceil((1 - alpha) * n_b)."""
    reps = np.sort(np.asarray(replicates, dtype=np.float64))
    # round first so that e.g. 0.95 * 200 does not ceil to 191
    rank = math.ceil(round((1.0 - alpha) * len(reps), 9))
    rank = min(max(rank, 1), len(reps))
    return float(reps[rank - 1])


@dataclass
class TestReport:
    statistic: float
    replicates: np.ndarray
    quantile: float
    p_value: float
    reject: bool
    alpha: float
    n: int
    provenance: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self, include_replicates: bool = False) -> dict:
        d = {
            "statistic": self.statistic,
            "quantile": self.quantile,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "n": self.n,
            "provenance": self.provenance,
        }
        if include_replicates:
            d["replicates"] = self.replicates.tolist()
        return d

    def to_json(self, include_replicates: bool = False, **kw) -> str:
        return json.dumps(self.to_dict(include_replicates), **kw)

    CSV_FIELDS = ("preset", "kernel_x", "kernel_y", "n", "l", "n_b", "seed", "alpha",
                  "statistic", "quantile", "p_value", "reject")

    def csv_row(self) -> str:
        p = self.provenance
        row = [p.get("preset") or "", p.get("kernel_x"), p.get("kernel_y"), self.n, p.get("l"),
               p.get("n_b"), json.dumps(p.get("seed")), self.alpha, repr(self.statistic),
               repr(self.quantile), repr(self.p_value), int(self.reject)]
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(row)
        return buf.getvalue()

    def __eq__(self, other):
        if not isinstance(other, TestReport):
            return NotImplemented
        return self.to_dict(True) == other.to_dict(True)


def _seed_repr(seed: Seed):
    return int(seed) if isinstance(seed, (int, np.integer)) else [int(s) for s in seed]


def run_bootstrap(
    gc_x: np.ndarray, gc_y: np.ndarray, alpha: float, cfg: MultiplierConfig, provenance: dict | None = None
) -> TestReport:
    """Calibrate ``n * HSIC_n`` against ``n_b`` wild-bootstrap replicates."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    n = gc_x.shape[0]
    product = gc_x * gc_y
    stat = float(np.sum(product)) / n
    R = draw_multipliers(n, cfg.l, make_rng(cfg.seed), size=cfg.n_b)
    reps = n * hsic_star_batch(product, R)
    q = bootstrap_quantile(reps, alpha)
    p = (1 + int(np.sum(reps >= stat))) / (cfg.n_b + 1)
    # a zero statistic carries no evidence even if the bootstrap law is degenerate at 0
    reject = bool(stat >= q and stat > 0.0)
    prov = {"seed": _seed_repr(cfg.seed), "l": int(cfg.l), "n_b": int(cfg.n_b),
            "quantile_rule": "order statistic ceil((1-alpha)*n_b)"}
    prov.update(provenance or {})
    return TestReport(stat, reps, q, p, reject, alpha, n, prov)


def wild_bootstrap_test(
    X: FunctionalSample,
    Y: FunctionalSample,
    kernels: KernelsLike = "HSIC_G",
    alpha: float = 0.05,
    cfg: MultiplierConfig | None = None,
) -> TestReport:
    """Test HSIC(X, Y) = 0 for paired, possibly serially dependent samples."""
    cfg = cfg or MultiplierConfig()
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    if X.n < 2:
        raise DimensionError("need at least 2 paired observations")
    name, kx, ky = resolve_kernels(kernels)
    gx, gy, kx, ky = centered_grams(X, Y, kx, ky)
    prov = {"preset": name, "kernel_x": str(kx), "kernel_y": str(ky),
            "bandwidth_sq_x": kx.bandwidth_sq, "bandwidth_sq_y": ky.bandwidth_sq}
    return run_bootstrap(gx, gy, alpha, cfg, prov)
