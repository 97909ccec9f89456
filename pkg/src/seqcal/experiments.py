"""Pool builders over a range of sample sizes and the comparison table.

Every builder returns one :class:`SetPool` holding sets for all requested n.
Seeds are derived from ``(seed, n)`` so a curve does not depend on which
other sample sizes were requested.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .calib import (
    CalibratedSet,
    SetPool,
    bar_search,
    calibrate_designed,
    derive_seed,
    moment_rows,
    multi_dist_pool,
    _target,
)
from .dist import calibration_families, parse_dist
from .estimate import RMSEReport, bias_curve, mc_method, rmse
from .seqlab import Arithmetic, arithmetic

__all__ = [
    "SD_RANGE",
    "MEDIAN_RANGE",
    "arithmetic_pool",
    "designed_pool",
    "bar_pool",
    "multi_pool",
    "TableRow",
    "table_rows",
    "run_table",
]

log = logging.getLogger(__name__)

SD_RANGE = tuple(range(5, 101))
MEDIAN_RANGE = tuple(range(5, 100, 2))


def arithmetic_pool(dist, ns: Iterable[int]) -> SetPool:
    """The arithmetic grid alone, weight 1, at every n."""
    dist = parse_dist(dist)
    sets = []
    for n in ns:
        recipe = Arithmetic(n)
        x = dist.quantile(arithmetic(n).values[None, :])
        a = np.vstack([moment_rows(x, 4), np.ones(1)])
        resid = float(np.linalg.norm(a[:, 0] - _target(dist, n, 4)))
        sets.append(CalibratedSet(dist, n, (recipe,), np.ones(1), resid))
    return SetPool("Arithmetic", sets)


def designed_pool(dist, ns: Iterable[int], n_sets: int, seed: int, tie_break: str = "sparse") -> SetPool:
    """``n_sets`` designed-12 calibrations per n, each with its own random seed."""
    dist = parse_dist(dist)
    sets = [
        calibrate_designed(dist, n, derive_seed(seed, n, j), tie_break=tie_break)
        for n in ns
        for j in range(n_sets)
    ]
    return SetPool("Designed", sets, {"dist": dist.token, "seed": seed, "tie_break": tie_break})


def bar_pool(dist, ns: Iterable[int], n_sets: int, seed: int, label: str = "BAR", **kwargs) -> SetPool:
    dist = parse_dist(dist)
    sets, meta = [], {}
    for n in ns:
        part = bar_search(dist, n, n_sets, derive_seed(seed, n), **kwargs)
        sets += part.sets
        meta[str(n)] = part.meta["acceptance_rate"]
    return SetPool(label, sets, {"dist": dist.token, "seed": seed, "acceptance_rate": meta})


def multi_pool(specs, ns: Iterable[int], sets_per_spec: int, seed: int, label: str = "BAR-multi", **kwargs) -> SetPool:
    sets = []
    for n in ns:
        sets += multi_dist_pool(specs, sets_per_spec, n, derive_seed(seed, n), **kwargs).sets
    return SetPool(label, sets, {"dists": [parse_dist(s).token for s in specs], "seed": seed})


@dataclass
class TableRow:
    block: str
    report: RMSEReport

    def to_dict(self) -> dict:
        return {"block": self.block, **self.report.to_dict()}


def _mc_row(label, dist, est, ns, samples, seed, repeats, quantity):
    curves = [
        bias_curve(mc_method(dist, est, samples, derive_seed(seed, r), quantity=quantity), dist, est, ns, quantity)
        for r in range(repeats)
    ]
    return rmse(curves, label)


def table_rows(
    repeats: int = 10,
    seed: int = 0,
    blocks: Iterable[str] = ("bias-sd", "bias-median", "variance-sd"),
    variance_quantity: str = "variance",
    sd_range=SD_RANGE,
    median_range=MEDIAN_RANGE,
) -> list[TableRow]:
    """RMSE rows comparing sequence pools with Monte Carlo at equal budgets.

    Blocks: ``bias-sd`` (Gaussian sd), ``bias-median`` (exponential median)
    and ``variance-sd`` (spread of the Gaussian sd, as ``variance_quantity``).
    Each repeat builds fresh pools from ``derive_seed(seed, repeat)``; within a
    repeat the smaller Gaussian pools are the leading sets of the 50-set pool.
    """
    gauss = parse_dist("gaussian")
    expo = parse_dist("exponential")
    blocks = tuple(blocks)
    rows: list[TableRow] = []
    curves: dict[str, list] = {}

    def add(key, curve):
        curves.setdefault(key, []).append(curve)

    need_g = "bias-sd" in blocks or "variance-sd" in blocks
    if "bias-sd" in blocks:
        rows.append(TableRow("bias-sd", rmse(bias_curve(arithmetic_pool(gauss, sd_range), gauss, "sd", sd_range), "Arithmetic")))
    for r in range(repeats):
        rseed = derive_seed(seed, r)
        log.info("repeat %d of %d", r + 1, repeats)
        if need_g:
            g50 = bar_pool(gauss, sd_range, 50, rseed, "BAR-G 50S")
            g10 = SetPool("BAR-G 10S", [s for n in sd_range for s in g50.at(n).sets[:10]])
            g20 = [s for n in sd_range for s in g50.at(n).sets[:20]]
        if "bias-sd" in blocks:
            add("G10", bias_curve(g10, gauss, "sd", sd_range))
            add("G50", bias_curve(g50, gauss, "sd", sd_range))
            other = multi_pool(calibration_families(), sd_range, 3, derive_seed(rseed, 1))
            d5 = SetPool("BAR-5D 50S", g20 + other.sets)
            add("5D", bias_curve(d5, gauss, "sd", sd_range))
            add("D10", bias_curve(designed_pool(gauss, sd_range, 10, rseed), gauss, "sd", sd_range))
        if "variance-sd" in blocks:
            q = variance_quantity
            add("vG10", bias_curve(g10, gauss, "sd", sd_range, q))
            add("vG50", bias_curve(g50, gauss, "sd", sd_range, q))
        if "bias-median" in blocks:
            e30 = bar_pool(expo, median_range, 30, derive_seed(rseed, 2), "BAR-E 30S")
            e10 = SetPool("BAR-E 10S", [s for n in median_range for s in e30.at(n).sets[:10]])
            add("E10", bias_curve(e10, expo, "median", median_range))
            add("E30", bias_curve(e30, expo, "median", median_range))

    if "bias-sd" in blocks:
        rows.append(TableRow("bias-sd", _mc_row("Random 10S", gauss, "sd", sd_range, 120, seed, repeats, "bias")))
        rows += [
            TableRow("bias-sd", rmse(curves["D10"], "12 Designed 10S")),
            TableRow("bias-sd", rmse(curves["G10"], "BAR-G 10S")),
            TableRow("bias-sd", rmse(curves["G50"], "BAR-G 50S")),
            TableRow("bias-sd", rmse(curves["5D"], "BAR-5D 50S")),
        ]
    if "bias-median" in blocks:
        rows.append(TableRow("bias-median", _mc_row("Random 10S", expo, "median", median_range, 120, seed, repeats, "bias")))
        rows += [
            TableRow("bias-median", rmse(curves["E10"], "BAR-E 10S")),
            TableRow("bias-median", rmse(curves["E30"], "BAR-E 30S")),
        ]
    if "variance-sd" in blocks:
        q = variance_quantity
        rows += [
            TableRow("variance-sd", _mc_row("Random 10S", gauss, "sd", sd_range, 120, seed, repeats, q)),
            TableRow("variance-sd", _mc_row("Random 50S", gauss, "sd", sd_range, 600, seed, repeats, q)),
            TableRow("variance-sd", rmse(curves["vG10"], "BAR-G 10S")),
            TableRow("variance-sd", rmse(curves["vG50"], "BAR-G 50S")),
        ]
    return rows


def run_table(**kwargs) -> dict:
    rows = table_rows(**kwargs)
    return {"rows": [r.to_dict() for r in rows]}
