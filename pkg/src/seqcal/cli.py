"""Command-line interface: ``seqcal <command> [options]``.

Data go to ``--out`` (or stdout); short summaries go to stderr. Exit codes:
0 success, 2 usage or bad token, 3 search exhausted (partial file written),
4 domain / unsupported / sample-size mismatch.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Sequence

import numpy as np

from ._io import csv_text, dumps_json, fmt_float
from ._version import __version__
from .calib import THRESHOLD, SetPool, derive_seed
from .dist import (
    calibration_families,
    expected_median_quadrature,
    exponential_median_closed_form,
    gaussian_sd_expectation_factor,
    gaussian_sd_variance,
    parse_dist,
)
from .estimate import (
    QUANTITIES,
    bias_curve,
    mc_method,
    parse_estimator,
    rmse,
    sse_csv,
    sse_study,
)
from .exceptions import (
    DegenerateScaleError,
    DimensionError,
    DomainError,
    ParameterError,
    SearchExhausted,
    UnsupportedError,
)
from .experiments import bar_pool, designed_pool, multi_pool, table_rows
from .seqlab import GENERATOR_ID

DEFAULT_SEED = 20240101

EXIT_OK, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_DOMAIN = 0, 2, 3, 4

TRUTH_QUANTITIES = ("sd-bias", "sd-variance", "sd-se", "median", "median-quadrature")


class UsageError(Exception):
    pass


def _meta(args) -> dict:
    return {
        "version": __version__,
        "command": " ".join(args.argv),
        "seed": getattr(args, "seed", None),
        "generator": GENERATOR_ID,
    }


def _comments(args) -> list[str]:
    return [f"{k}: {v}" for k, v in _meta(args).items()]


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _n_range(args) -> list[int]:
    if getattr(args, "n", None) is not None:
        ns = [args.n]
    else:
        if args.nmin is None or args.nmax is None:
            raise UsageError("give --n or both --nmin and --nmax")
        if args.nmin > args.nmax:
            raise UsageError("--nmin must not exceed --nmax")
        ns = list(range(args.nmin, args.nmax + 1))
    if getattr(args, "odd_only", False):
        ns = [n for n in ns if n % 2]
    if not ns:
        raise UsageError("empty sample-size range")
    return ns


def _pool_with_meta(pool: SetPool, args) -> SetPool:
    pool.meta = {**pool.meta, "run": _meta(args)}
    return pool


def _build_pool(args, ns, seed) -> SetPool:
    dist = parse_dist(args.dist)
    if args.sets is None:
        args.sets = {"designed": 1, "bar": 10, "multi": 20}[args.mode]
    kw = {"threshold": args.threshold, "tie_break": args.tie_break}
    if args.mode == "designed":
        pool = designed_pool(dist, ns, args.sets, seed, tie_break=args.tie_break or "sparse")
        pool.label = f"Designed {args.sets}S"
        return pool
    kw["tie_break"] = args.tie_break or "spread"
    if args.mode == "bar":
        return bar_pool(dist, ns, args.sets, seed, f"BAR {args.sets}S", **kw)
    families = [parse_dist(t) for t in args.families] if args.families else calibration_families()
    base = bar_pool(dist, ns, args.sets, seed, **kw)
    other = multi_pool(families, ns, args.sets_per_spec, derive_seed(seed, 1), **kw)
    total = args.sets + len(families) * args.sets_per_spec
    n_families = len({f.family for f in families})
    pool = SetPool.combine(f"BAR-{n_families}D {total}S", base, other)
    pool.meta.update({"dists": [dist.token] + [f.token for f in families], "sets_per_spec": args.sets_per_spec})
    return pool


def cmd_calibrate(args) -> int:
    ns = _n_range(args)
    try:
        pool = _build_pool(args, ns, args.seed)
    except SearchExhausted as exc:
        partial = exc.partial if isinstance(exc.partial, SetPool) else SetPool("partial")
        partial.meta = {**partial.meta, "exhausted": str(exc)}
        if args.out:
            _emit(_pool_with_meta(partial, args).to_json(), args.out)
        print(f"search exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    _pool_with_meta(pool, args)
    if args.out:
        _emit(pool.to_json(), args.out)
    for n in ns:
        res = [s.residual for s in pool.at(n).sets]
        ok = sum(r < s.threshold for r, s in zip(res, pool.at(n).sets))
        print(f"n={n} sets={len(res)} qualified={ok} max_residual={fmt_float(max(res))}")
    return EXIT_OK


def _load_pools(paths) -> list[SetPool]:
    return [SetPool.load(p) for p in paths]


def cmd_estimate(args) -> int:
    ns = _n_range(args)
    dist = parse_dist(args.dist)
    est = parse_estimator(args.estimator)
    if args.pool:
        pools = _load_pools(args.pool)
        if args.repeats not in (1, len(pools)):
            raise UsageError("with --pool, each file is one repeat; --repeats must match the file count")
    else:
        if args.mode is None:
            raise UsageError("give --pool files or --mode to calibrate on the fly")
        pools = [_build_pool(args, ns, derive_seed(args.seed, r)) for r in range(args.repeats)]
    for pool in pools:
        missing = [n for n in ns if not pool.at(n).sets]
        if missing:
            raise DimensionError(f"pool {pool.label!r} has no sets at n={missing[:5]}")
        for s in pool.sets:
            if s.dist != dist and args.mode is None and not args.allow_mixed:
                raise DimensionError(
                    f"pool contains sets calibrated to {s.dist.token}; pass --allow-mixed for pooled families"
                )
    label = args.label or pools[0].label
    curves = [bias_curve(p, dist, est, ns, args.quantity, label=label) for p in pools]
    return _write_curves(args, curves, label)


def _write_curves(args, curves, label) -> int:
    report = rmse(curves, label)
    mean_curve = curves[0]
    if len(curves) > 1:
        mean_curve = type(curves[0])(
            label, curves[0].quantity, curves[0].n, np.mean([c.estimate for c in curves], axis=0), curves[0].truth
        )
    comments = _comments(args) + [
        f"label: {label}",
        f"quantity: {curves[0].quantity}",
        f"estimate: mean over {len(curves)} repeat(s)",
        f"rmse: {fmt_float(report.rmse)}",
    ]
    _emit(mean_curve.to_csv(comments), args.out)
    if args.report:
        _emit(report.to_json(_meta(args)), args.report)
    print(f"{label}: rmse={report.rmse:.6g} over {report.repeats} repeat(s)", file=sys.stderr)
    return EXIT_OK


def _truth_value(q, dist, n):
    if q == "sd-bias":
        _need_gaussian(dist)
        return dist["sigma"] * gaussian_sd_expectation_factor(n)
    if q == "sd-variance":
        _need_gaussian(dist)
        return gaussian_sd_variance(n, dist["sigma"])
    if q == "sd-se":
        _need_gaussian(dist)
        return math.sqrt(gaussian_sd_variance(n, dist["sigma"]))
    if q == "median":
        if dist.family == "exponential":
            return exponential_median_closed_form(n, dist["lambda"])
        return expected_median_quadrature(dist, n)
    if q == "median-quadrature":
        return expected_median_quadrature(dist, n)
    raise UnsupportedError(f"unknown truth quantity {q!r}")


def _need_gaussian(dist):
    if dist.family != "gaussian":
        raise UnsupportedError("exact sd results are available for the Gaussian family only")


def cmd_truth(args) -> int:
    dist = parse_dist(args.dist)
    ns = _n_range(args)
    rows = [(n, _truth_value(args.quantity, dist, n)) for n in ns]
    comments = _comments(args) + [f"dist: {dist.token}", f"quantity: {args.quantity}"]
    _emit(csv_text(("n", args.quantity), rows, comments), args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    ns = _n_range(args)
    dist = parse_dist(args.dist)
    est = parse_estimator(args.estimator)
    label = args.label or f"Random {args.samples}"
    curves = [
        bias_curve(
            mc_method(dist, est, args.samples, derive_seed(args.seed, r), quantity=args.quantity),
            dist, est, ns, args.quantity, label=label,
        )
        for r in range(args.repeats)
    ]
    return _write_curves(args, curves, label)


def cmd_compare(args) -> int:
    rows = table_rows(
        repeats=args.repeats,
        seed=args.seed,
        blocks=args.blocks,
        variance_quantity=args.variance_quantity,
    )
    out = {"meta": _meta(args), "rows": [r.to_dict() for r in rows]}
    if args.report:
        _emit(dumps_json(out), args.report)
    table = csv_text(
        ("block", "label", "rmse", "repeats"),
        [(r.block, r.report.label, r.report.rmse, r.report.repeats) for r in rows],
        _comments(args),
    )
    _emit(table, args.out)
    return EXIT_OK


def cmd_sse(args) -> int:
    dist = parse_dist(args.dist)
    ns = _n_range(args)
    stats = [s.strip() for s in args.stats.split(",") if s.strip()]
    if len(stats) < 1:
        raise UsageError("--stats needs at least one statistic")
    reports = [sse_study(dist, stats, n, args.reps, args.seed) for n in ns]
    comments = _comments(args) + [f"dist: {dist.token}", f"reps: {args.reps}", f"reference: {stats[0]}"]
    _emit(sse_csv(reports, comments), args.out)
    last = reports[-1]
    for name in last.stats:
        se, sse = last[name]
        print(f"n={last.n} {name}: se={se:.6g} sse={sse:.6g}", file=sys.stderr)
    return EXIT_OK


def _add_range(p, single=True):
    if single:
        p.add_argument("--n", type=int, help="a single sample size")
    p.add_argument("--nmin", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--odd-only", action="store_true", help="keep odd sample sizes only")


def _add_pool_options(p, mode_required):
    p.add_argument("--mode", choices=("designed", "bar", "multi"), required=mode_required)
    p.add_argument("--sets", type=int, help="sets per n; default 1 designed, 10 bar, 20 multi")
    p.add_argument("--sets-per-spec", type=int, default=3)
    p.add_argument("--families", nargs="+", help="distribution tokens pooled in multi mode")
    p.add_argument("--threshold", type=float, default=THRESHOLD)
    p.add_argument("--tie-break", choices=("spread", "sparse"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqcal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate sequence sets and write a pool file")
    p.add_argument("--dist", required=True)
    _add_pool_options(p, mode_required=False)
    p.set_defaults(mode="designed")
    _add_range(p)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("estimate", help="estimator expectation or spread from pools")
    p.add_argument("--dist", required=True)
    p.add_argument("--estimator", required=True)
    p.add_argument("--quantity", choices=QUANTITIES, default="bias")
    p.add_argument("--pool", action="append", help="pool file; repeat the flag for several repeats")
    p.add_argument("--allow-mixed", action="store_true", help="accept pools calibrated to other families")
    _add_pool_options(p, mode_required=False)
    _add_range(p)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--label")
    p.add_argument("--out")
    p.add_argument("--report", help="RMSE report JSON path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("truth", help="exact reference curves")
    p.add_argument("--dist", required=True)
    p.add_argument("--quantity", choices=TRUTH_QUANTITIES, required=True)
    _add_range(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("mc", help="plain Monte Carlo baseline curves")
    p.add_argument("--dist", required=True)
    p.add_argument("--estimator", required=True)
    p.add_argument("--quantity", choices=QUANTITIES, default="bias")
    p.add_argument("--samples", type=int, default=120)
    _add_range(p)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--label")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("compare", help="RMSE table of pools against Monte Carlo")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--blocks", nargs="+", choices=("bias-sd", "bias-median", "variance-sd"),
                   default=["bias-sd", "bias-median", "variance-sd"])
    p.add_argument("--variance-quantity", choices=("variance", "se"), default="variance")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sse", help="standard and scaled standard errors")
    p.add_argument("--dist", required=True)
    p.add_argument("--stats", default="mean,median", help="comma-separated; the first is the reference")
    _add_range(p)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sse)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, UnsupportedError, DimensionError, DegenerateScaleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
