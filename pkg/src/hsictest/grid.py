"""Discretized L2(0, 1) geometry: grids, trapezoidal weights, inner products.

Curves are stored as rows of a float64 matrix evaluated on a common grid.
Euclidean vectors reuse the same machinery through :meth:`Grid.vector`,
which carries uniform weights ``1/d``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DataError, DimensionError, InvalidGridError

__all__ = [
    "Grid",
    "FunctionalSample",
    "make_uniform_grid",
    "make_grid",
    "trapezoid_weights",
    "inner_product",
    "norm",
    "distance",
    "read_sample_csv",
    "write_sample_csv",
]

_WEIGHT_SUM_TOL = 1e-12


def trapezoid_weights(points) -> np.ndarray:
    """Composite trapezoid weights for an arbitrary increasing set of nodes."""
    t = np.asarray(points, dtype=np.float64)
    h = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray
    weights: np.ndarray
    is_vector: bool = False

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        wts = np.array(self.weights, dtype=np.float64)
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if pts.ndim != 1 or wts.shape != pts.shape:
            raise InvalidGridError("points and weights must be 1-d of equal length")
        if np.any(wts < 0) or not np.all(np.isfinite(wts)):
            raise InvalidGridError("weights must be finite and nonnegative")
        if abs(wts.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise InvalidGridError(f"weights sum to {wts.sum()!r}, expected 1")
        if self.is_vector:
            if len(pts) < 1:
                raise InvalidGridError("vector grid needs at least one coordinate")
            return
        if len(pts) < 2:
            raise InvalidGridError("a quadrature grid needs at least 2 points")
        if pts[0] != 0.0 or pts[-1] != 1.0 or np.any(np.diff(pts) <= 0):
            raise InvalidGridError("points must increase strictly from 0 to 1")

    @classmethod
    def vector(cls, d: int) -> "Grid":
        """Grid representing R^d with the Euclidean inner product scaled by 1/d."""
        if d < 1:
            raise InvalidGridError("vector dimension must be >= 1")
        pts = np.arange(d, dtype=np.float64) / max(d - 1, 1)
        return cls(pts, np.full(d, 1.0 / d), is_vector=True)

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def spacing(self) -> float | None:
        """Common spacing when the grid is uniform, else None."""
        h = np.diff(self.points)
        if len(h) and np.allclose(h, h[0], rtol=0, atol=1e-14):
            return float(h[0])
        return None

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.is_vector == other.is_vector
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.is_vector, self.points.tobytes(), self.weights.tobytes()))

    def to_dict(self) -> dict:
        return {
            "kind": "vector" if self.is_vector else "trapezoid",
            "m": self.m,
            "points": self.points.tolist(),
        }


def make_uniform_grid(m: int) -> Grid:
    if m < 2:
        raise InvalidGridError(f"need m >= 2 grid points, got {m}")
    pts = np.linspace(0.0, 1.0, m)
    h = 1.0 / (m - 1)
    w = np.full(m, h)
    w[0] = w[-1] = h / 2
    return Grid(pts, w)


def make_grid(points) -> Grid:
    """Trapezoid grid on possibly irregular nodes spanning [0, 1]."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 1 or len(pts) < 2:
        raise InvalidGridError("need at least 2 grid points")
    if pts[0] != 0.0 or pts[-1] != 1.0 or np.any(np.diff(pts) <= 0):
        raise InvalidGridError("points must increase strictly from 0 to 1")
    return Grid(pts, trapezoid_weights(pts))


def _check_conform(f: np.ndarray, grid: Grid):
    if f.shape[-1] != grid.m:
        raise DimensionError(f"curve has {f.shape[-1]} values but grid has {grid.m} points")


def inner_product(f, g, grid: Grid) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _check_conform(f, grid)
    _check_conform(g, grid)
    return float(np.sum(grid.weights * f * g))


def norm(f, grid: Grid) -> float:
    return float(np.sqrt(max(inner_product(f, f, grid), 0.0)))


def distance(f, g, grid: Grid) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    _check_conform(f, grid)
    _check_conform(g, grid)
    return norm(f - g, grid)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """n curves on a shared grid, one per row."""

    values: np.ndarray
    grid: Grid
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(-1, 1) if self.grid.m == 1 else v.reshape(1, -1)
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionError("values must be an n x m matrix with n >= 1")
        _check_conform(v, self.grid)
        if not np.all(np.isfinite(v)):
            raise DataError("sample contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_vectors(cls, x) -> "FunctionalSample":
        """Wrap an (n,) or (n, d) array of Euclidean observations."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        return cls(x, Grid.vector(x.shape[1]))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, idx) -> "FunctionalSample":
        v = self.values[idx]
        if v.ndim == 1:
            v = v[None, :]
        return FunctionalSample(v, self.grid)

    def norms(self) -> np.ndarray:
        if "norms" not in self._cache:
            sq = self.values**2 @ self.grid.weights
            self._cache["norms"] = np.sqrt(np.maximum(sq, 0.0))
        return self._cache["norms"]

    def sq_distances(self) -> np.ndarray:
        """Pairwise squared L2 distances, computed by direct differencing."""
        if "sqd" not in self._cache:
            if self.n == 1:
                d2 = np.zeros((1, 1))
            else:
                d2 = squareform(pdist(self.values, "sqeuclidean", w=self.grid.weights))
            self._cache["sqd"] = d2
        return self._cache["sqd"]

    def inner_products(self) -> np.ndarray:
        if "ip" not in self._cache:
            ip = (self.values * self.grid.weights) @ self.values.T
            self._cache["ip"] = (ip + ip.T) / 2
        return self._cache["ip"]


def read_sample_csv(path, grid_row: bool = False, vector: bool = False) -> FunctionalSample:
    """Load one observation per row.

    With ``grid_row`` the first row holds the grid points (irregular grids
    are allowed). With ``vector`` the columns are Euclidean coordinates.
    Otherwise an m-column file is read on the uniform m-point grid, and a
    single column is treated as a scalar series.
    """
    rows = []
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for r, line in enumerate(csv.reader(fh), start=1):
            if not line or all(not c.strip() for c in line):
                continue
            vals = []
            for c, cell in enumerate(line, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"non-numeric value {cell!r}", row=r, column=c) from None
                if not np.isfinite(vals[-1]):
                    raise DataError(f"non-finite value {cell!r}", row=r, column=c)
            if rows and len(vals) != len(rows[0][1]):
                raise DataError(
                    f"expected {len(rows[0][1])} columns, found {len(vals)}", row=r
                )
            rows.append((r, vals))
    if grid_row:
        if not rows:
            raise DataError("missing grid row", row=1)
        try:
            grid = make_grid(rows[0][1])
        except InvalidGridError as exc:
            raise DataError(f"invalid grid row: {exc}", row=rows[0][0]) from None
        rows = rows[1:]
    if not rows:
        raise DataError("no observations found")
    values = np.array([v for _, v in rows], dtype=np.float64)
    if not grid_row:
        m = values.shape[1]
        grid = Grid.vector(m) if (vector or m == 1) else make_uniform_grid(m)
    return FunctionalSample(values, grid)


def write_sample_csv(sample: FunctionalSample, dest, grid_row: bool = False) -> None:
    """Write to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(sample, dest, grid_row)
        return
    with open(Path(dest), "w", newline="", encoding="utf-8") as fh:
        _write_rows(sample, fh, grid_row)


def _write_rows(sample: FunctionalSample, fh, grid_row: bool):
    w = csv.writer(fh, lineterminator="\n")
    if grid_row:
        w.writerow([repr(float(t)) for t in sample.grid.points])
    for row in sample.values:
        w.writerow([repr(float(v)) for v in row])
