"""Kernels on L2(0, 1), Gram matrices, double centering and the l2 embedding."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateSampleError, DimensionError
from .grid import FunctionalSample, Grid, distance, inner_product, norm

__all__ = [
    "LINEAR",
    "DISTANCE",
    "GAUSSIAN",
    "FIXED",
    "MEDIAN",
    "KernelSpec",
    "EmbeddingSpec",
    "parse_kernel",
    "kernel_eval",
    "median_heuristic",
    "resolve_kernel",
    "gram",
    "double_center",
    "embed_to_l2",
]

LINEAR = "linear"
DISTANCE = "distance"
GAUSSIAN = "gaussian"
FIXED = "fixed"
MEDIAN = "median"


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    bandwidth_sq: float | None = None
    bandwidth_policy: str = FIXED

    def __post_init__(self):
        if self.kind not in (LINEAR, DISTANCE, GAUSSIAN):
            raise ConfigurationError(f"unknown kernel kind {self.kind!r}")
        if self.bandwidth_policy not in (FIXED, MEDIAN):
            raise ConfigurationError(f"unknown bandwidth policy {self.bandwidth_policy!r}")
        if self.kind != GAUSSIAN:
            if self.bandwidth_sq is not None or self.bandwidth_policy != FIXED:
                raise ConfigurationError(f"{self.kind} kernel takes no bandwidth")
        elif self.bandwidth_sq is not None and not self.bandwidth_sq > 0:
            raise ConfigurationError("Gaussian bandwidth_sq must be positive")

    @classmethod
    def gaussian(cls, bandwidth_sq: float | None = None) -> "KernelSpec":
        if bandwidth_sq is None:
            return cls(GAUSSIAN, None, MEDIAN)
        return cls(GAUSSIAN, float(bandwidth_sq), FIXED)

    @property
    def resolved(self) -> bool:
        return self.kind != GAUSSIAN or self.bandwidth_sq is not None

    def __str__(self):
        if self.kind != GAUSSIAN:
            return self.kind
        if self.bandwidth_policy == MEDIAN and self.bandwidth_sq is None:
            return "gaussian:median"
        return f"gaussian:{self.bandwidth_sq!r}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bandwidth_sq": self.bandwidth_sq,
            "bandwidth_policy": self.bandwidth_policy,
        }


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``linear``, ``distance``, ``gaussian:median`` or ``gaussian:<value>``."""
    kind, _, arg = text.strip().lower().partition(":")
    if kind in (LINEAR, DISTANCE):
        if arg:
            raise ConfigurationError(f"{kind} kernel takes no bandwidth: {text!r}")
        return KernelSpec(kind)
    if kind == GAUSSIAN:
        if arg in ("", MEDIAN):
            return KernelSpec.gaussian()
        try:
            return KernelSpec.gaussian(float(arg))
        except ValueError:
            raise ConfigurationError(f"bad Gaussian bandwidth in {text!r}") from None
    raise ConfigurationError(f"unknown kernel {text!r}")


def kernel_eval(spec: KernelSpec, x, y, grid: Grid) -> float:
    if spec.kind == LINEAR:
        return inner_product(x, y, grid)
    if spec.kind == DISTANCE:
        return norm(x, grid) + norm(y, grid) - distance(x, y, grid)
    if not spec.resolved:
        raise ConfigurationError("Gaussian kernel bandwidth has not been resolved")
    return float(np.exp(-distance(x, y, grid) ** 2 / spec.bandwidth_sq))


def median_heuristic(sample: FunctionalSample) -> float:
    """Median squared distance over pairs of observations with unequal values.

    Duplicate rows (bitwise equal) are excluded, so the result is positive
    whenever it exists.
    """
    if sample.n < 2:
        raise DegenerateSampleError("median heuristic needs at least 2 observations")
    _, labels = np.unique(sample.values, axis=0, return_inverse=True)
    labels = labels.ravel()
    iu, ju = np.triu_indices(sample.n, k=1)
    distinct = labels[iu] != labels[ju]
    if not distinct.any():
        raise DegenerateSampleError("all observations are identical; no positive bandwidth")
    d2 = sample.sq_distances()[iu[distinct], ju[distinct]]
    med = float(np.median(d2))
    if not med > 0:
        raise DegenerateSampleError("median squared distance is not positive")
    return med


def resolve_kernel(spec: KernelSpec, sample: FunctionalSample) -> KernelSpec:
    if spec.resolved:
        return spec
    return replace(spec, bandwidth_sq=median_heuristic(sample))


def gram(sample: FunctionalSample, spec: KernelSpec) -> np.ndarray:
    """Dense n x n kernel matrix; median-heuristic specs are resolved on ``sample``."""
    spec = resolve_kernel(spec, sample)
    if spec.kind == LINEAR:
        return sample.inner_products().copy()
    d2 = sample.sq_distances()
    if spec.kind == DISTANCE:
        nrm = sample.norms()
        return nrm[:, None] + nrm[None, :] - np.sqrt(d2)
    return np.exp(-d2 / spec.bandwidth_sq)


def double_center(G) -> np.ndarray:
    """Subtract row and column means and add back the grand mean."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {G.shape}")
    # centering ignores constant shifts; removing one makes constant G center to exact zeros
    G = G - G[0, 0]
    row = G.mean(axis=1, keepdims=True)
    col = G.mean(axis=0, keepdims=True)
    return G - row - col + G.mean()


@dataclass(frozen=True)
class EmbeddingSpec:
    anchors: Sequence
    weights: Sequence[float]
    metric_cap: float

    def __post_init__(self):
        if len(self.anchors) != len(self.weights):
            raise ConfigurationError("anchors and weights differ in length")
        if any(not w > 0 for w in self.weights):
            raise ConfigurationError("embedding weights must be positive")
        if not self.metric_cap > 0:
            raise ConfigurationError("metric_cap must be positive")

    @property
    def truncation(self) -> int:
        return len(self.anchors)


def embed_to_l2(spec: EmbeddingSpec, s, metric: Callable) -> np.ndarray:
    """Coordinates ``w_k * min(cap, metric(s, s_k))`` for each anchor ``s_k``.

    The capped metric is itself a metric, so distinct points are separated as
    soon as some anchor lies strictly closer to one than the other. The
    output can be fed to any kernel through :meth:`Grid.vector`.
    """
    if spec.truncation == 0:
        raise ConfigurationError("embedding needs at least one anchor")
    return np.array(
        [w * min(spec.metric_cap, float(metric(s, a))) for a, w in zip(spec.anchors, spec.weights)],
        dtype=np.float64,
    )
