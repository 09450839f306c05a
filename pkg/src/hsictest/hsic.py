"""Empirical HSIC V-statistics for pairs and for q >= 2 variables."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ConfigurationError, DimensionError
from .grid import FunctionalSample
from .kernels import DISTANCE, LINEAR, KernelSpec, double_center, gram, resolve_kernel

__all__ = [
    "PRESETS",
    "StatPreset",
    "HsicValue",
    "get_preset",
    "resolve_kernels",
    "hsic_v",
    "hsic_pair",
    "hsic_q",
    "hsic_q_from_grams",
    "centered_grams",
]

# rounding slack below zero that reports clamp away
NEG_CLAMP = 1e-12


@dataclass(frozen=True)
class StatPreset:
    name: str
    kernel_x: KernelSpec
    kernel_y: KernelSpec


PRESETS = {
    "MDD": StatPreset("MDD", KernelSpec(DISTANCE), KernelSpec(LINEAR)),
    "KCMD_G": StatPreset("KCMD_G", KernelSpec.gaussian(), KernelSpec(LINEAR)),
    "DCOV": StatPreset("DCOV", KernelSpec(DISTANCE), KernelSpec(DISTANCE)),
    "HSIC_G": StatPreset("HSIC_G", KernelSpec.gaussian(), KernelSpec.gaussian()),
}

KernelsLike = Union[str, StatPreset, Sequence[KernelSpec]]


def get_preset(name: str) -> StatPreset:
    key = name.strip().upper()
    # published rejection tables label MDD as MMD; accept both
    if key == "MMD":
        key = "MDD"
    try:
        return PRESETS[key]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"
        ) from None


def resolve_kernels(kernels: KernelsLike) -> tuple[str | None, KernelSpec, KernelSpec]:
    """Normalize a preset name, a StatPreset or a (kernel_x, kernel_y) pair."""
    if isinstance(kernels, str):
        kernels = get_preset(kernels)
    if isinstance(kernels, StatPreset):
        return kernels.name, kernels.kernel_x, kernels.kernel_y
    kx, ky = kernels
    return None, kx, ky


@dataclass(frozen=True)
class HsicValue:
    value: float
    raw: float
    n: int
    preset: str | None = None
    kernels: tuple[KernelSpec, ...] = field(default=())

    def __float__(self):
        return self.value


def _clamp(raw: float) -> float:
    return 0.0 if -NEG_CLAMP <= raw < 0.0 else raw


def _check_square_pair(A: np.ndarray, B: np.ndarray):
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise DimensionError(f"Gram shapes {A.shape} and {B.shape} do not match")


def hsic_v(gc_x, gc_y) -> HsicValue:
    """``(1/n^2) sum_ij Gc_x[i, j] * Gc_y[i, j]`` for centered Gram matrices."""
    gc_x = np.asarray(gc_x, dtype=np.float64)
    gc_y = np.asarray(gc_y, dtype=np.float64)
    _check_square_pair(gc_x, gc_y)
    n = gc_x.shape[0]
    raw = float(np.sum(gc_x * gc_y)) / n**2
    return HsicValue(_clamp(raw), raw, n)


def centered_grams(
    X: FunctionalSample, Y: FunctionalSample, kx: KernelSpec, ky: KernelSpec
) -> tuple[np.ndarray, np.ndarray, KernelSpec, KernelSpec]:
    if X.n != Y.n:
        raise DimensionError(f"X has {X.n} observations but Y has {Y.n}")
    kx = resolve_kernel(kx, X)
    ky = resolve_kernel(ky, Y)
    return double_center(gram(X, kx)), double_center(gram(Y, ky)), kx, ky


def hsic_pair(X: FunctionalSample, Y: FunctionalSample, kernels: KernelsLike = "HSIC_G") -> HsicValue:
    name, kx, ky = resolve_kernels(kernels)
    gx, gy, kx, ky = centered_grams(X, Y, kx, ky)
    v = hsic_v(gx, gy)
    return HsicValue(v.value, v.raw, v.n, name, (kx, ky))


def _q_terms(grams: Sequence[np.ndarray]) -> np.ndarray:
    grams = [np.asarray(g, dtype=np.float64) for g in grams]
    if len(grams) < 2:
        raise DimensionError("need at least two variables")
    shape = grams[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(g.shape != shape for g in grams):
        raise DimensionError("Gram matrices must be square with a common size")
    return np.stack(grams)


def hsic_q_from_grams(grams: Sequence[np.ndarray]) -> float:
    """Three-term expansion on uncentered Gram matrices."""
    K = _q_terms(grams)
    n = K.shape[1]
    term1 = np.prod(K, axis=0).sum() / n**2
    term2 = 2.0 / n * np.prod(K.mean(axis=2), axis=0).sum()
    term3 = np.prod(K.mean(axis=(1, 2)))
    return float(term1 - term2 + term3)


def hsic_q(samples: Sequence[FunctionalSample], kernels: Sequence[KernelSpec]) -> HsicValue:
    if len(samples) < 2:
        raise DimensionError("hsic_q needs q >= 2 samples")
    if len(kernels) != len(samples):
        raise ConfigurationError("one kernel per sample is required")
    ns = {s.n for s in samples}
    if len(ns) != 1:
        raise DimensionError(f"samples have differing sizes {sorted(ns)}")
    specs = tuple(resolve_kernel(k, s) for k, s in zip(kernels, samples))
    raw = hsic_q_from_grams([gram(s, k) for s, k in zip(samples, specs)])
    return HsicValue(_clamp(raw), raw, samples[0].n, None, specs)
