"""Monte Carlo rejection-rate harness and lagged autodependence scans."""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bootstrap import MultiplierConfig, TestReport, block_length, make_rng, parse_block_rule, run_bootstrap, wild_bootstrap_test
from .dgp import BURN_IN, CONCURRENT_DGPS, concurrent_regression, har1, setar, wiener
from .errors import ConfigurationError, HsicTestError, InsufficientSampleError
from .grid import FunctionalSample, make_uniform_grid
from .hsic import KernelsLike, centered_grams, get_preset

__all__ = [
    "PAIR_DGPS",
    "Scenario",
    "RejectionRow",
    "RejectionTable",
    "run_scenario",
    "lagged_pairs",
    "autodep_scan",
    "named_scenario",
    "NAMED_SCENARIOS",
    "default_workers",
]

WORKERS_ENV = "HSICTEST_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


def lagged_pairs(Y: FunctionalSample, lag: int) -> tuple[FunctionalSample, FunctionalSample]:
    """Return (X, Y') with X_i = Y_{i-lag}, using observations lag+1..n only."""
    if lag < 1:
        raise ConfigurationError(f"lag must be a positive integer, got {lag}")
    if lag >= Y.n:
        raise InsufficientSampleError(f"lag {lag} leaves no pairs in a series of length {Y.n}")
    return Y[: Y.n - lag], Y[lag:]


def autodep_scan(
    Y: FunctionalSample,
    lags: Sequence[int],
    kernels: KernelsLike = "HSIC_G",
    alpha: float = 0.05,
    cfg: MultiplierConfig | None = None,
    l_rule: str | None = None,
) -> list[TestReport]:
    """One wild-bootstrap test of Y_i against Y_{i-lag} per lag.

    ``l_rule`` resolves the block length from each effective sample size
    and overrides ``cfg.l``. Lag ``L`` uses the seed substream ``(seed..., L)``.
    """
    cfg = cfg or MultiplierConfig()
    lags = list(lags)
    if lags and max(lags) >= Y.n:
        raise InsufficientSampleError(f"max lag {max(lags)} needs more than {Y.n} observations")
    base = [cfg.seed] if isinstance(cfg.seed, (int, np.integer)) else list(cfg.seed)
    reports = []
    for lag in lags:
        X, Yl = lagged_pairs(Y, lag)
        l = block_length(l_rule, X.n) if l_rule else cfg.l
        rep = wild_bootstrap_test(X, Yl, kernels, alpha, MultiplierConfig(l, cfg.n_b, base + [lag]))
        rep.provenance["lag"] = lag
        reports.append(rep)
    return reports


# pair generators: (params, n, grid, rng, burn_in) -> (X, Y)

def _pair_har1(p, n, grid, rng, burn_in):
    g = float(p.get("gamma1", 0.0))
    return har1(g, n, grid, rng, burn_in), har1(g, n, grid, rng, burn_in)


def _pair_setar(p, n, grid, rng, burn_in):
    lag = int(p.get("lag", 1))
    return lagged_pairs(setar(n + lag, grid, rng, burn_in), lag)


def _pair_concurrent(p, n, grid, rng, burn_in):
    d = int(p.get("dgp", 1))
    if d not in CONCURRENT_DGPS:
        raise ConfigurationError(f"concurrent dgp must be one of 1-4, got {d}")
    return concurrent_regression(*CONCURRENT_DGPS[d], n, grid, rng, burn_in)


def _pair_iid_wiener(p, n, grid, rng, burn_in):
    return FunctionalSample(wiener(grid, rng, n), grid), FunctionalSample(wiener(grid, rng, n), grid)


def _pair_constant_y(p, n, grid, rng, burn_in):
    return FunctionalSample(wiener(grid, rng, n), grid), FunctionalSample(np.zeros((n, grid.m)), grid)


PAIR_DGPS: dict[str, Callable] = {
    "har1": _pair_har1,
    "setar": _pair_setar,
    "concurrent": _pair_concurrent,
    "iid_wiener": _pair_iid_wiener,
    "constant_y": _pair_constant_y,
}


@dataclass
class Scenario:
    dgp: str
    dgp_params: dict = field(default_factory=dict)
    presets: list = field(default_factory=lambda: ["MDD", "KCMD_G", "DCOV", "HSIC_G"])
    ns: list = field(default_factory=lambda: [100])
    l_rules: list = field(default_factory=lambda: ["fixed:1"])
    alpha: float = 0.05
    n_b: int = 200
    mc_reps: int = 200
    master_seed: int = 0
    m: int = 1001
    burn_in: int = BURN_IN
    name: str = ""

    def __post_init__(self):
        if self.dgp not in PAIR_DGPS:
            raise ConfigurationError(f"unknown dgp {self.dgp!r}; choose from {', '.join(PAIR_DGPS)}")
        if self.mc_reps < 1:
            raise ConfigurationError("mc_reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigurationError("alpha must lie in (0, 1)")
        self.presets = [get_preset(p).name for p in self.presets]
        for rule in self.l_rules:
            parse_block_rule(rule)
        self.dgp_params = {k: (list(v) if isinstance(v, (list, tuple)) else [v])
                           for k, v in self.dgp_params.items()}
        MultiplierConfig(1, self.n_b)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "Scenario":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid scenario file {path}: {exc}") from None
        return cls.from_dict(d)

    def param_combos(self) -> list[dict]:
        keys = sorted(self.dgp_params)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.dgp_params[k] for k in keys))]


def _label(params: dict) -> str:
    return ",".join(f"{k}={params[k]}" for k in sorted(params))


def _key(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


@dataclass(frozen=True)
class RejectionRow:
    dgp: str
    params: str
    preset: str
    l_rule: str
    l: int
    n: int
    rejections: int
    reps: int
    rate: float | None
    error: str = ""


@dataclass
class RejectionTable:
    rows: list
    metadata: dict
    wall_time: float = field(default=0.0, compare=False)

    CSV_FIELDS = ("dgp", "params", "preset", "l_rule", "l", "n", "rate", "rejections", "reps", "error")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for r in self.rows:
            d = asdict(r)
            d["rate"] = "" if r.rate is None else f"{r.rate:.6g}"
            w.writerow([d[f] for f in self.CSV_FIELDS])
        return buf.getvalue()

    def to_json(self, include_timing: bool = True) -> str:
        meta = dict(self.metadata)
        if include_timing:
            meta["wall_time_s"] = round(self.wall_time, 3)
        return json.dumps({"metadata": meta, "rows": [asdict(r) for r in self.rows]}, indent=2)

    def rate(self, preset: str, n: int, l_rule: str | None = None, **params) -> float | None:
        label = _label(params) if params else None
        preset = get_preset(preset).name
        for r in self.rows:
            if r.preset == preset and r.n == n and (l_rule is None or r.l_rule == l_rule) \
                    and (label is None or r.params == label):
                return r.rate
        raise KeyError((preset, n, l_rule, params))


def _one_replication(args):
    """Draw one dataset and run every (preset, l-rule) cell on it."""
    scenario, params, n, rep = args
    s = scenario
    grid = make_uniform_grid(s.m)
    label = _label(params)
    out = {}
    try:
        rng = make_rng([s.master_seed, _key(s.dgp, label, n), rep, 0])
        X, Y = PAIR_DGPS[s.dgp](params, n, grid, rng, s.burn_in)
    except HsicTestError as exc:
        return {(p, r): exc for p in s.presets for r in s.l_rules}
    for preset in s.presets:
        pr = get_preset(preset)
        try:
            gx, gy, _, _ = centered_grams(X, Y, pr.kernel_x, pr.kernel_y)
        except HsicTestError as exc:
            out.update({(preset, r): exc for r in s.l_rules})
            continue
        for rule in s.l_rules:
            l = block_length(rule, X.n)
            seed = [s.master_seed, _key(s.dgp, label, n, preset, rule), rep, 1]
            try:
                out[(preset, rule)] = run_bootstrap(gx, gy, s.alpha, MultiplierConfig(l, s.n_b, seed)).reject
            except HsicTestError as exc:
                out[(preset, rule)] = exc
    return out


def run_scenario(scenario: Scenario, workers: int | None = None, progress: Callable | None = None) -> RejectionTable:
    """Empirical rejection rate for every (dgp params, preset, l-rule, n) cell.

    Each replication draws from a seed substream keyed by the cell identity
    and replication index, so results do not depend on the worker count or
    on the order cells are run in.
    """
    s = scenario
    workers = default_workers() if workers is None else max(1, int(workers))
    start = time.perf_counter()
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        rows = _collect(s, pool, workers, progress)
    finally:
        if pool is not None:
            pool.shutdown()
    return RejectionTable(rows, asdict(s), time.perf_counter() - start)


def _collect(s: Scenario, pool, workers: int, progress) -> list:
    rows = []
    for params in s.param_combos():
        for n in s.ns:
            jobs = [(s, params, n, rep) for rep in range(s.mc_reps)]
            if pool is not None:
                results = list(pool.map(_one_replication, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
            else:
                results = [_one_replication(j) for j in jobs]
            for preset in s.presets:
                for rule in s.l_rules:
                    outcomes = [r[(preset, rule)] for r in results]
                    errs = [o for o in outcomes if isinstance(o, Exception)]
                    rej = sum(1 for o in outcomes if o is True)
                    rows.append(RejectionRow(
                        dgp=s.dgp, params=_label(params), preset=preset, l_rule=rule,
                        l=block_length(rule, n), n=n,
                        rejections=rej, reps=s.mc_reps,
                        rate=None if errs else rej / s.mc_reps,
                        error=f"{type(errs[0]).__name__}: {errs[0]} ({len(errs)} reps)" if errs else "",
                    ))
            if progress:
                progress(params, n)
    return rows


_DESK = dict(mc_reps=200, n_b=200, ns=[100, 250])
_FULL = dict(mc_reps=1000, n_b=1000, ns=[100, 250, 1000])
_ALL_RULES = ["fixed:1", "scaled:2", "scaled:5", "scaled:10"]

NAMED_SCENARIOS = {
    "table1": dict(dgp="har1", dgp_params={"gamma1": [0.0, 0.75, 1.5, 2.25]}, l_rules=_ALL_RULES),
    "table2": dict(dgp="setar", dgp_params={"lag": [1, 2, 4, 6]}, l_rules=["scaled:2"]),
    "table3": dict(dgp="concurrent", dgp_params={"dgp": [1, 2, 3, 4]}, l_rules=["scaled:2"]),
}


def named_scenario(name: str, full: bool = False, **overrides) -> Scenario:
    """``table1-desk`` style names; ``full=True`` (or a ``-full`` suffix) uses the 1000 x 1000 settings."""
    base, _, scale = name.lower().partition("-")
    if base not in NAMED_SCENARIOS or scale not in ("", "desk", "full"):
        raise ConfigurationError(
            f"unknown scenario {name!r}; choose from "
            + ", ".join(f"{k}-desk" for k in NAMED_SCENARIOS)
        )
    sizes = _FULL if (full or scale == "full") else _DESK
    cfg = {**NAMED_SCENARIOS[base], **sizes, "name": f"{base}-{'full' if sizes is _FULL else 'desk'}"}
    cfg.update(overrides)
    return Scenario.from_dict(cfg)
