"""Finite-sample bias and variance of estimators from calibrated pools.

A calibrated set is read as a discrete mixture: sequence ``i`` is one
"sample" of size n carrying probability ``w_i``. The expectation of an
estimator is its weighted average over the sequences, the variance the
weighted spread around it. Pools average those per-set numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._io import csv_text, dumps_json
from .calib import SetPool, derive_seed
from .dist import (
    DistributionSpec,
    expected_median_quadrature,
    exponential_median_closed_form,
    gaussian_sd_expectation_factor,
    gaussian_sd_variance,
    parse_dist,
)
from .exceptions import DegenerateScaleError, DimensionError, DomainError, UnsupportedError
from .moments import u_central_moment
from .seqlab import uniform_stream

__all__ = [
    "QUANTITIES",
    "EstimatorSpec",
    "parse_estimator",
    "weighted_expectation",
    "weighted_variance",
    "weighted_quantity",
    "mc_baseline",
    "truth",
    "BiasCurve",
    "bias_curve",
    "pool_method",
    "mc_method",
    "RMSEReport",
    "rmse",
    "SSEReport",
    "standard_error",
    "scaled_standard_error",
    "sse_study",
    "sse_csv",
]

QUANTITIES = ("bias", "variance", "se")


def _sd(x):
    return np.std(x, axis=-1, ddof=1)


_BUILTIN = {
    "mean": (lambda x: np.mean(x, axis=-1), 1),
    "sd": (_sd, 2),
    "median": (lambda x: np.median(x, axis=-1), 1),
    "u2": (lambda x: u_central_moment(x, 2, axis=-1), 2),
    "u3": (lambda x: u_central_moment(x, 3, axis=-1), 3),
    "u4": (lambda x: u_central_moment(x, 4, axis=-1), 4),
}


@dataclass(frozen=True)
class EstimatorSpec:
    """A statistic applied along the last axis of a sample array.

    Built-ins are ``mean``, ``sd`` (square root of the Bessel-corrected
    variance), ``median`` and ``u2``..``u4``. :meth:`plugin` wraps any
    deterministic, permutation-invariant function of one sample.
    """

    name: str
    func: Callable = field(compare=False, repr=False)
    min_n: int = 1

    @classmethod
    def plugin(cls, name: str, func: Callable, min_n: int = 1) -> "EstimatorSpec":
        def vectorized(x):
            x = np.asarray(x, dtype=float)
            if x.ndim == 1:
                return float(func(x))
            return np.apply_along_axis(func, -1, x)

        return cls(name, vectorized, min_n)

    def __call__(self, samples):
        x = np.asarray(samples, dtype=float)
        if x.shape[-1] < self.min_n:
            raise DomainError(f"{self.name} needs samples of size >= {self.min_n}, got {x.shape[-1]}")
        return self.func(x)


def parse_estimator(token: str | EstimatorSpec) -> EstimatorSpec:
    if isinstance(token, EstimatorSpec):
        return token
    key = token.strip().lower()
    if key not in _BUILTIN:
        raise UnsupportedError(f"unknown estimator {token!r}; expected one of {sorted(_BUILTIN)}")
    func, min_n = _BUILTIN[key]
    return EstimatorSpec(key, func, min_n)


def _set_stats(pool: SetPool, dist: DistributionSpec, est: EstimatorSpec, n: int):
    sets = pool.at(n).sets
    if not sets:
        raise DimensionError(f"pool {pool.label!r} has no sets calibrated at n={n}")
    out = []
    for s in sets:
        values = est(s.transformed(dist))
        out.append((np.asarray(s.weights, dtype=float), values))
    return out


def weighted_expectation(pool: SetPool, dist, est, n: int) -> float:
    """Mean over sets of ``sum_i w_i * est(Q(sequence_i))``."""
    dist, est = parse_dist(dist), parse_estimator(est)
    return float(np.mean([w @ v for w, v in _set_stats(pool, dist, est, n)]))


def weighted_variance(pool: SetPool, dist, est, n: int) -> float:
    """Mean over sets of the within-set weighted variance of the estimator."""
    dist, est = parse_dist(dist), parse_estimator(est)
    per_set = []
    for w, v in _set_stats(pool, dist, est, n):
        centre = w @ v
        per_set.append(w @ (v - centre) ** 2)
    return float(np.mean(per_set))


def weighted_quantity(pool: SetPool, dist, est, n: int, quantity: str = "bias") -> float:
    if quantity == "bias":
        return weighted_expectation(pool, dist, est, n)
    if quantity == "variance":
        return weighted_variance(pool, dist, est, n)
    if quantity == "se":
        return math.sqrt(weighted_variance(pool, dist, est, n))
    raise UnsupportedError(f"unknown quantity {quantity!r}")


def mc_baseline(dist, est, n: int, n_samples: int, seed: int, rep: int = 0) -> tuple[float, float]:
    """Plain Monte Carlo: mean and unbiased variance of ``est`` over ``n_samples`` draws.

    The stream is derived from ``(seed, n, rep)``, so curves do not depend on
    the order in which sample sizes are visited.
    """
    dist, est = parse_dist(dist), parse_estimator(est)
    if n_samples < 2:
        raise DomainError("mc_baseline needs n_samples >= 2")
    u = uniform_stream(derive_seed(seed, n, rep), 0, n_samples * n).reshape(n_samples, n)
    values = est(dist.quantile(u))
    return float(values.mean()), float(values.var(ddof=1))


def truth(dist, est, n: int, quantity: str = "bias") -> float:
    """Exact E[est] (``bias``), Var(est) or its square root (``se``)."""
    dist, est = parse_dist(dist), parse_estimator(est)
    if quantity not in QUANTITIES:
        raise UnsupportedError(f"unknown quantity {quantity!r}")
    if n < est.min_n:
        raise DomainError(f"{est.name} needs n >= {est.min_n}")
    mv = dist.central_moments()
    name = est.name
    value = None
    if name == "mean":
        value = mv.mean if quantity == "bias" else mv.mu2 / n
    elif name == "sd" and dist.family == "gaussian":
        sigma = dist["sigma"]
        value = sigma * gaussian_sd_expectation_factor(n) if quantity == "bias" else gaussian_sd_variance(n, sigma)
    elif name == "median" and quantity == "bias":
        if n % 2 == 0:
            raise UnsupportedError("the exact expected median is only available for odd n")
        if dist.family == "exponential":
            return exponential_median_closed_form(n, dist["lambda"])
        return expected_median_quadrature(dist, n)
    elif name in ("u2", "u3", "u4") and quantity == "bias":
        value = mv[int(name[1]) - 1]
    if value is None:
        raise UnsupportedError(f"no exact {quantity} for {name} under {dist.token}")
    return math.sqrt(value) if quantity == "se" else float(value)


@dataclass
class BiasCurve:
    label: str
    quantity: str
    n: np.ndarray
    estimate: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=int)
        self.estimate = np.asarray(self.estimate, dtype=float)
        self.truth = np.asarray(self.truth, dtype=float)
        if np.any(np.diff(self.n) <= 0):
            raise DomainError("curve sample sizes must be strictly increasing")

    @property
    def error(self) -> np.ndarray:
        return self.estimate - self.truth

    @property
    def rmse(self) -> float:
        return float(np.sqrt(np.mean(self.error**2)))

    def to_csv(self, comments: Sequence[str] = ()) -> str:
        rows = [(int(n), e, t, e - t) for n, e, t in zip(self.n, self.estimate, self.truth)]
        return csv_text(("n", "estimate", "truth", "error"), rows, comments)


def pool_method(pool: SetPool, dist, est, quantity: str = "bias") -> Callable[[int], float]:
    return lambda n: weighted_quantity(pool, dist, est, n, quantity)


def mc_method(dist, est, n_samples: int, seed: int, rep: int = 0, quantity: str = "bias") -> Callable[[int], float]:
    def method(n):
        mean, var = mc_baseline(dist, est, n, n_samples, seed, rep)
        return {"bias": mean, "variance": var, "se": math.sqrt(var)}[quantity]

    return method


def bias_curve(method, dist, est, ns, quantity: str = "bias", truth_fn=None, label: str = "") -> BiasCurve:
    """Evaluate ``method`` (a callable of n, or a pool) against the exact curve."""
    dist, est = parse_dist(dist), parse_estimator(est)
    if isinstance(method, SetPool):
        label = label or method.label
        method = pool_method(method, dist, est, quantity)
    if truth_fn is None:
        def truth_fn(n):
            return truth(dist, est, n, quantity)
    ns = [int(n) for n in ns]
    ref = [truth_fn(n) for n in ns]
    return BiasCurve(label, quantity, ns, [method(n) for n in ns], ref)


@dataclass
class RMSEReport:
    label: str
    rmse: float
    repeats: int
    per_repeat: list[float]

    def to_dict(self) -> dict:
        return {"label": self.label, "rmse": self.rmse, "repeats": self.repeats, "per_repeat": self.per_repeat}

    def to_json(self, meta: dict | None = None) -> str:
        d = self.to_dict()
        if meta:
            d["meta"] = meta
        return dumps_json(d)


def rmse(curves: Sequence[BiasCurve] | BiasCurve, label: str | None = None) -> RMSEReport:
    """Average the per-repeat curve RMSEs."""
    if isinstance(curves, BiasCurve):
        curves = [curves]
    if not curves:
        raise DomainError("rmse needs at least one curve")
    per = [c.rmse for c in curves]
    return RMSEReport(label if label is not None else curves[0].label, float(np.mean(per)), len(per), per)


def standard_error(column) -> float:
    """Unbiased standard deviation of one column."""
    x = np.asarray(column, dtype=float).ravel()
    if len(x) < 2:
        raise DomainError("standard_error needs at least two rows")
    return float(np.std(x, ddof=1))


@dataclass
class SSEReport:
    """Per-statistic SE and scaled SE of a replicates-by-statistics matrix.

    ``scale[r]`` is the mean of the reference column over the mean of column
    ``r``; column ``r`` is multiplied by it before taking its spread.
    """

    stats: tuple[str, ...]
    se: np.ndarray
    sse: np.ndarray
    scale: np.ndarray
    rows: int
    n: int | None = None

    @property
    def se_of_mean(self) -> np.ndarray:
        return self.se / math.sqrt(self.rows)

    @property
    def sse_of_mean(self) -> np.ndarray:
        return self.sse / math.sqrt(self.rows)

    def __getitem__(self, stat: str) -> tuple[float, float]:
        i = self.stats.index(stat)
        return float(self.se[i]), float(self.sse[i])


def scaled_standard_error(matrix, reference: int = 0, stats: Sequence[str] | None = None, n: int | None = None) -> SSEReport:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 2:
        raise DomainError("need a 2-D matrix with at least two rows")
    means = m.mean(axis=0)
    # A mean lost in rounding noise is as useless a scale as an exact zero.
    zero = np.abs(means) <= 1e-12 * np.abs(m).max(axis=0)
    if np.any(zero):
        bad = np.flatnonzero(zero).tolist()
        raise DegenerateScaleError(f"columns {bad} have zero mean; use the plain standard error")
    scale = means[reference] / means
    scale[reference] = 1.0
    se = m.std(axis=0, ddof=1)
    sse = (m * scale).std(axis=0, ddof=1)
    names = tuple(stats) if stats is not None else tuple(f"s{i}" for i in range(m.shape[1]))
    if len(names) != m.shape[1]:
        raise DimensionError("one name per column is required")
    return SSEReport(names, se, sse, scale, m.shape[0], n)


def sse_study(dist, stats: Sequence[str], n: int, reps: int, seed: int) -> SSEReport:
    """Monte Carlo matrix of the given statistics, then :func:`scaled_standard_error`."""
    dist = parse_dist(dist)
    ests = [parse_estimator(s) for s in stats]
    u = uniform_stream(derive_seed(seed, n), 0, reps * n).reshape(reps, n)
    x = dist.quantile(u)
    matrix = np.column_stack([e(x) for e in ests])
    return scaled_standard_error(matrix, 0, [e.name for e in ests], n)


def sse_csv(reports: Sequence[SSEReport], comments: Sequence[str] = ()) -> str:
    rows = []
    for rep in reports:
        for i, name in enumerate(rep.stats):
            rows.append((rep.n, name, float(rep.se[i]), float(rep.sse[i])))
    return csv_text(("n", "stat", "se", "sse"), rows, comments)
