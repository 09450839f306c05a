"""Command line entry point: ``hsictest {test,autodep,simulate,replicate}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bootstrap import MultiplierConfig, block_length, parse_block_rule, wild_bootstrap_test
from .dgp import BURN_IN, CONCURRENT_DGPS, concurrent_regression, fgarch, gp_exp_cov, har1, setar, wiener
from .errors import ConfigurationError, HsicTestError
from .experiment import Scenario, autodep_scan, named_scenario, run_scenario
from .grid import FunctionalSample, make_uniform_grid, read_sample_csv, write_sample_csv
from .hsic import get_preset
from .kernels import parse_kernel

log = logging.getLogger("hsictest")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

# settings shared by test and autodep; config keys match flag dest names
_TEST_DEFAULTS = {
    "preset": "HSIC_G",
    "alpha": 0.05,
    "ln_rule": "scaled:2",
    "nb": 1000,
    "seed": 0,
    "kernel_x": None,
    "kernel_y": None,
    "format": "json",
}


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    return cfg


def _settings(args, defaults: dict) -> dict:
    """CLI flags win over the config file, which wins over defaults."""
    cfg = _load_config(getattr(args, "config", None))
    out = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        if val is None:
            val = cfg.get(key, cfg.get(key.replace("_", "-"), default))
        out[key] = val
    return out


def _kernels(s: dict):
    if s["kernel_x"] or s["kernel_y"]:
        if not (s["kernel_x"] and s["kernel_y"]):
            raise ConfigurationError("--kernel-x and --kernel-y must be given together")
        return (parse_kernel(s["kernel_x"]), parse_kernel(s["kernel_y"]))
    return get_preset(s["preset"])


def _read(path, args) -> FunctionalSample:
    return read_sample_csv(path, grid_row=args.grid_row, vector=args.vector)


def _print_report(rep, fmt: str, full: bool = False):
    if fmt == "json":
        print(rep.to_json(include_replicates=full, indent=2))
    elif fmt == "csv":
        print(rep.csv_row())
    else:
        p = rep.provenance
        lag = f"  lag={p['lag']}" if "lag" in p else ""
        print(f"{p.get('preset') or 'custom'}{lag}  n={rep.n}  l={p['l']}  n_b={p['n_b']}  seed={p['seed']}")
        print(f"  kernels     {p['kernel_x']} / {p['kernel_y']}")
        print(f"  n*HSIC_n    {rep.statistic:.6g}")
        print(f"  quantile    {rep.quantile:.6g}  (1 - alpha = {1 - rep.alpha:g})")
        print(f"  p-value     {rep.p_value:.4f}")
        print(f"  decision    {'reject' if rep.reject else 'do not reject'}")


def cmd_test(args) -> int:
    s = _settings(args, _TEST_DEFAULTS)
    kernels = _kernels(s)
    rule = parse_block_rule(s["ln_rule"])
    X, Y = _read(args.x, args), _read(args.y, args)
    cfg = MultiplierConfig(block_length(rule, X.n), int(s["nb"]), int(s["seed"]))
    rep = wild_bootstrap_test(X, Y, kernels, float(s["alpha"]), cfg)
    _print_report(rep, s["format"], args.replicates)
    return EXIT_OK


def cmd_autodep(args) -> int:
    s = _settings(args, {**_TEST_DEFAULTS, "lags": "1,2,4,6"})
    kernels = _kernels(s)
    lags = s["lags"]
    if isinstance(lags, str):
        try:
            lags = [int(v) for v in lags.split(",") if v.strip()]
        except ValueError:
            raise ConfigurationError(f"bad lag list {s['lags']!r}") from None
    rule = s["ln_rule"]
    parse_block_rule(rule)
    Y = _read(args.y, args)
    reps = autodep_scan(Y, lags, kernels, float(s["alpha"]), MultiplierConfig(1, int(s["nb"]), int(s["seed"])), l_rule=rule)
    if s["format"] == "json":
        print(json.dumps([r.to_dict(args.replicates) for r in reps], indent=2))
    else:
        for r in reps:
            _print_report(r, s["format"])
    return EXIT_OK


def cmd_simulate(args) -> int:
    grid = make_uniform_grid(args.m)
    rng = np.random.default_rng(args.seed)
    sidecar = {"dgp": args.dgp, "n": args.n, "m": args.m, "seed": args.seed, "burn_in": args.burn_in,
               "grid": "uniform trapezoid"}
    if args.dgp == "har1":
        out = {"": har1(args.gamma1, args.n, grid, rng, args.burn_in)}
        sidecar["gamma1"] = args.gamma1
    elif args.dgp == "setar":
        out = {"": setar(args.n, grid, rng, args.burn_in)}
    elif args.dgp == "fgarch":
        out = {"": fgarch(args.n, grid, rng, args.burn_in)}
    elif args.dgp == "wiener":
        out = {"": FunctionalSample(wiener(grid, rng, args.n), grid)}
        sidecar.pop("burn_in")
    elif args.dgp == "gp":
        out = {"": FunctionalSample(gp_exp_cov(grid, rng, args.n), grid)}
        sidecar.pop("burn_in")
    else:
        flags = CONCURRENT_DGPS[args.concurrent_dgp]
        X, Y = concurrent_regression(*flags, args.n, grid, rng, args.burn_in)
        out = {"_x": X, "_y": Y}
        sidecar["concurrent_dgp"] = args.concurrent_dgp
        sidecar["gammas"] = list(flags)
    if args.out is None:
        if len(out) > 1:
            raise ConfigurationError("concurrent output needs --out (writes <out>_x.csv and <out>_y.csv)")
        write_sample_csv(out[""], sys.stdout, grid_row=args.grid_row)
        return EXIT_OK
    base = Path(args.out)
    files = []
    for suffix, sample in out.items():
        path = base.with_name(base.stem + suffix + (base.suffix or ".csv"))
        write_sample_csv(sample, path, grid_row=args.grid_row)
        files.append(str(path))
    sidecar["files"] = files
    base.with_name(base.stem + ".json").write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    return EXIT_OK


def cmd_replicate(args) -> int:
    overrides = {}
    if args.mc_reps is not None:
        overrides["mc_reps"] = args.mc_reps
    if args.nb is not None:
        overrides["n_b"] = args.nb
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.n is not None:
        overrides["ns"] = args.n
    if args.m is not None:
        overrides["m"] = args.m
    if Path(args.scenario).is_file():
        d = {**_load_config(args.scenario), **overrides}
        if args.full:
            d.update(mc_reps=1000, n_b=1000)
        scenario = Scenario.from_dict(d)
    else:
        scenario = named_scenario(args.scenario, full=args.full, **overrides)
    name = scenario.name or Path(args.scenario).stem
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    def progress(params, n):
        log.info("finished %s n=%d", params, n)

    table = run_scenario(scenario, workers=args.workers, progress=progress)
    (outdir / f"{name}.csv").write_text(table.to_csv(), encoding="utf-8")
    (outdir / f"{name}.json").write_text(table.to_json(), encoding="utf-8")
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def _add_common(p):
    p.add_argument("--preset", help="MDD, KCMD_G, DCOV or HSIC_G")
    p.add_argument("--kernel-x", dest="kernel_x", help="linear | distance | gaussian:median | gaussian:<value>")
    p.add_argument("--kernel-y", dest="kernel_y")
    p.add_argument("--alpha", type=float)
    p.add_argument("--ln-rule", dest="ln_rule", help="fixed:<k> or scaled:<c> (c * n^(1/5))")
    p.add_argument("--nb", type=int, help="bootstrap resamples")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="JSON file with any of the above settings")
    p.add_argument("--format", choices=["json", "table", "csv"])
    p.add_argument("--replicates", action="store_true", help="include bootstrap replicates in JSON")
    p.add_argument("--grid-row", action="store_true", help="first CSV row holds grid points")
    p.add_argument("--vector", action="store_true", help="columns are Euclidean coordinates")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsictest", description="Wild-bootstrap HSIC tests for functional time series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test (mean) independence of two paired samples")
    p.add_argument("x")
    p.add_argument("y")
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("autodep", help="scan serial dependence of one series at several lags")
    p.add_argument("y")
    p.add_argument("--lags", help="comma separated, e.g. 1,2,4,6")
    _add_common(p)
    p.set_defaults(func=cmd_autodep)

    p = sub.add_parser("simulate", help="write simulated curves as CSV")
    p.add_argument("dgp", choices=["har1", "setar", "fgarch", "concurrent", "wiener", "gp"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=1001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=BURN_IN)
    p.add_argument("--gamma1", type=float, default=0.0)
    p.add_argument("--concurrent-dgp", dest="concurrent_dgp", type=int, choices=sorted(CONCURRENT_DGPS), default=1)
    p.add_argument("--out", help="output CSV path; a JSON sidecar is written next to it")
    p.add_argument("--grid-row", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replicate", help="run a rejection-rate scenario")
    p.add_argument("scenario", help="table1-desk, table2-desk, table3-desk or a JSON scenario file")
    p.add_argument("--full", action="store_true", help="1000 replications x 1000 resamples, n up to 1000")
    p.add_argument("--mc-reps", dest="mc_reps", type=int)
    p.add_argument("--nb", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--m", type=int)
    p.add_argument("--workers", type=int, help="default from HSICTEST_WORKERS, else 1")
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HsicTestError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
