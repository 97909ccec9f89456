"""Moment-matching calibration of sequence sets.

A set of unit sequences is *consistent* with a distribution when some convex
combination of the quantile-transformed sequences reproduces the expected
sample moments E[m_1..m_k]. This module builds that linear system, solves for
the simplex weights, runs the stochastic search for qualifying random sets and
pools the results.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from ._version import __version__
from ._io import dumps_json, loads_json
from .dist import DistributionSpec, parse_dist
from .exceptions import DimensionError, DomainError, SearchExhausted
from .moments import expected_sample_central_moment
from .seqlab import (
    BETA_U,
    DESIGNED_PAIRS,
    GENERATOR_ID,
    Arithmetic,
    BetaQuantile,
    PseudoRandom,
    SequenceRecipe,
    designed_recipes,
    recipe_from_dict,
    uniform_stream,
)
from .seqlab import _realize

__all__ = [
    "THRESHOLD",
    "CalibrationProblem",
    "WeightSolution",
    "CalibratedSet",
    "SetPool",
    "derive_seed",
    "sequence_matrix",
    "moment_rows",
    "build_system",
    "solve_weights",
    "calibrate",
    "calibrate_designed",
    "bar_recipes",
    "bar_search",
    "multi_dist_pool",
]

log = logging.getLogger(__name__)

THRESHOLD = 1e-10
BAR_RANDOM = 10


def derive_seed(base: int, *keys: int) -> int:
    """Child seed for ``keys`` (e.g. repeat and sample size), 63-bit."""
    ss = np.random.SeedSequence([int(base), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class CalibrationProblem:
    dist: DistributionSpec
    n: int
    recipes: tuple[SequenceRecipe, ...]
    k_max: int = 4
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not 1 <= self.k_max <= 4:
            raise DomainError("k_max must be between 1 and 4")
        if len(self.recipes) < self.k_max + 1:
            raise DimensionError(
                f"need at least k_max + 1 = {self.k_max + 1} sequences, got {len(self.recipes)}"
            )
        if any(r.n != self.n for r in self.recipes):
            raise DimensionError("every recipe must have length n")
        _check_pairs(self.pairs, len(self.recipes))


def _check_pairs(pairs, size):
    seen = set()
    for i, j in pairs:
        if not (0 <= i < size and 0 <= j < size) or i == j:
            raise DimensionError(f"invalid pair ({i}, {j}) for {size} columns")
        if i in seen or j in seen:
            raise DimensionError("pairs must be disjoint")
        seen.update((i, j))


def sequence_matrix(recipes: Sequence[SequenceRecipe]) -> np.ndarray:
    """Realized sequences stacked as rows, shape (N, n)."""
    return np.vstack([_realize(r) for r in recipes])


def moment_rows(samples: np.ndarray, k_max: int = 4) -> np.ndarray:
    """Rows m_1..m_kmax of the system for samples stacked as rows."""
    mean = samples.mean(axis=1)
    dev = samples - mean[:, None]
    rows = [mean]
    power = dev
    for _ in range(2, k_max + 1):
        power = power * dev
        rows.append(power.mean(axis=1))
    return np.vstack(rows)


def _target(dist, n, k_max):
    mv = dist.central_moments()
    return np.array([expected_sample_central_moment(mv, n, k) for k in range(1, k_max + 1)] + [1.0])


def build_system(problem: CalibrationProblem, values: np.ndarray | None = None):
    """Return ``(A, b)`` with moment rows 1..k_max and a final row of ones."""
    if values is None:
        values = sequence_matrix(problem.recipes)
    x = problem.dist.quantile(values)
    a = np.vstack([moment_rows(x, problem.k_max), np.ones(x.shape[0])])
    return a, _target(problem.dist, problem.n, problem.k_max)


@dataclass
class WeightSolution:
    weights: np.ndarray
    residual: float
    threshold: float = THRESHOLD

    @property
    def feasible(self) -> bool:
        return self.residual < self.threshold


def _group_matrix(size, pairs):
    groups = [list(p) for p in pairs]
    paired = {i for p in pairs for i in p}
    groups += [[i] for i in range(size) if i not in paired]
    groups.sort(key=min)
    p = np.zeros((size, len(groups)))
    for g, idx in enumerate(groups):
        p[idx, g] = 1.0 / len(idx)
    return p, np.array([len(g) for g in groups], dtype=float)


def _simplex_lsq(a, b):
    """min ||a v - b|| over the probability simplex."""
    size = a.shape[1]
    big = 1e3 * max(1.0, np.abs(a).max(), np.abs(b).max())
    aw = np.vstack([a, np.full(size, big)])
    bw = np.append(b, big)
    v, _ = optimize.nnls(aw, bw, maxiter=50 * size)
    support = v > 0
    if support.any():
        # Re-solve on the support with the sum constraint imposed exactly.
        s = np.flatnonzero(support)
        k = len(s)
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = a[:, s].T @ a[:, s]
        kkt[:k, k] = kkt[k, :k] = 1.0
        rhs = np.append(a[:, s].T @ b, 1.0)
        vs = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        if np.all(vs >= 0):
            refined = np.zeros(size)
            refined[s] = vs
            if np.linalg.norm(a @ refined - b) <= np.linalg.norm(a @ v / v.sum() - b):
                return refined
    total = v.sum()
    return v / total if total > 0 else np.full(size, 1.0 / size)


def _row_basis(e, t):
    """Orthonormal rows spanning e's row space and the matching right-hand side.

    Drops the duplicated sum row and evens out the very different moment scales.
    """
    u, s, vt = np.linalg.svd(e, full_matrices=False)
    r = int(np.sum(s > s[0] * 1e-12))
    return vt[:r], (u[:, :r].T @ t) / s[:r]


def _min_norm_dual(c, tt, v0, d, max_iter=60):
    """Semismooth Newton on the dual of min sum(d v^2)/2 s.t. c v = tt, v >= 0.

    ``c`` must have orthonormal rows. The primal solution is
    ``v = max(0, c' lam) / d``. Returns None when the iteration does not
    settle, so the caller can fall back to the primal active-set method.
    """
    r = c.shape[0]

    def primal(lam):
        return np.maximum(0.0, c.T @ lam) / d

    def dual_value(lam):
        z = np.maximum(0.0, c.T @ lam)
        return tt @ lam - 0.5 * np.sum(z * z / d)

    lam = np.linalg.lstsq(c.T, d * v0, rcond=None)[0]
    for _ in range(max_iter):
        v = primal(lam)
        grad = tt - c @ v
        if np.linalg.norm(grad) <= 1e-13 * max(1.0, np.linalg.norm(tt)):
            break
        act = (c.T @ lam) > 0
        hess = (c[:, act] / d[act]) @ c[:, act].T
        step = np.linalg.lstsq(hess + 1e-14 * np.eye(r), grad, rcond=None)[0]
        g0, slope, alpha = dual_value(lam), grad @ step, 1.0
        while alpha > 1e-8 and dual_value(lam + alpha * step) < g0 + 1e-4 * alpha * slope - 1e-15 * abs(g0):
            alpha *= 0.5
        lam = lam + alpha * step
    else:
        return None
    # Exact re-solve on the detected support.
    support = np.flatnonzero(primal(lam) > 0)
    if len(support) == 0:
        return None
    k = len(support)
    kkt = np.zeros((k + r, k + r))
    kkt[:k, :k] = np.diag(d[support])
    kkt[:k, k:] = -c[:, support].T
    kkt[k:, :k] = c[:, support]
    sol = np.linalg.lstsq(kkt, np.concatenate([np.zeros(k), tt]), rcond=None)[0]
    v = np.zeros_like(v0)
    v[support] = sol[:k]
    if v.min() < 0:
        return None
    return v


def _min_norm_on_face(e, t, v0, d, max_iter=None):
    """Primal active-set QP: min sum(d v^2)/2 s.t. e v = t, v >= 0, from feasible v0.

    ``e`` must have full row rank.
    """
    if max_iter is None:
        # Degenerate vertices can make the active set cycle; bound the work.
        max_iter = 10 * len(v0)
    v = v0.copy()
    free = v > 0
    scale = max(1.0, np.abs(v).max())
    for _ in range(max_iter):
        f = np.flatnonzero(free)
        k, m = len(f), e.shape[0]
        ef = e[:, f]
        kkt = np.zeros((k + m, k + m))
        kkt[:k, :k] = np.diag(d[f])
        kkt[:k, k:] = ef.T
        kkt[k:, :k] = ef
        rhs = np.concatenate([-d[f] * v[f], np.zeros(m)])
        step = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        if np.abs(step).max(initial=0.0) <= 1e-14 * scale:
            lam = np.linalg.lstsq(ef.T, d[f] * v[f], rcond=None)[0]
            mult = d * v - e.T @ lam
            fixed = np.flatnonzero(~free)
            if len(fixed) == 0 or mult[fixed].min() >= -1e-12 * scale:
                return v
            free[fixed[np.argmin(mult[fixed])]] = True
            continue
        alpha, block = 1.0, None
        dec = step < 0
        if dec.any():
            ratios = -v[f][dec] / step[dec]
            j = int(np.argmin(ratios))
            if ratios[j] < 1.0:
                alpha, block = ratios[j], f[dec][j]
        v[f] += alpha * step
        if block is not None:
            v[block] = 0.0
            free[block] = False
    log.debug("min-norm QP hit the iteration cap")
    return v


def solve_weights(a, b, pairs=(), threshold: float = THRESHOLD, tie_break: str = "spread") -> WeightSolution:
    """Least-squares weights on the simplex with equal-weight pairs.

    Minimizes ``||a w - b||`` subject to ``w >= 0``, ``sum(w) == 1`` and
    ``w[i] == w[j]`` for every pair. The minimizer set is usually a whole
    face of the simplex; ``tie_break`` picks the point on it:

    ``"spread"``
        the minimum-norm point, i.e. the one closest to equal weights
        (largest effective number of sequences);
    ``"sparse"``
        a basic solution with at most ``rows`` nonzero groups.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise DimensionError(f"incompatible shapes {a.shape} and {b.shape}")
    if tie_break not in ("spread", "sparse"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    pairs = tuple(tuple(p) for p in pairs)
    _check_pairs(pairs, a.shape[1])
    group, sizes = _group_matrix(a.shape[1], pairs)
    ar = a @ group

    v = _simplex_lsq(ar, b)
    resid = np.linalg.norm(ar @ v - b)
    if tie_break == "spread" and np.count_nonzero(v) < len(v):
        t = b if resid < threshold else ar @ v
        e = np.vstack([ar, np.ones(len(v))])
        c, tt = _row_basis(e, np.append(t, 1.0))
        v2 = _min_norm_dual(c, tt, v, 1.0 / sizes)
        if v2 is None:
            v2 = _min_norm_on_face(c, tt, v, 1.0 / sizes)
        v2 = np.maximum(v2, 0.0)
        v2 /= v2.sum()
        resid2 = np.linalg.norm(ar @ v2 - b)
        if (resid < threshold and resid2 < threshold) or resid2 <= resid * (1 + 1e-9):
            v, resid = v2, resid2
    v = np.maximum(v, 0.0)
    v /= v.sum()
    w = group @ v
    return WeightSolution(w, float(np.linalg.norm(a @ w - b)), threshold)


@dataclass
class CalibratedSet:
    dist: DistributionSpec
    n: int
    recipes: tuple[SequenceRecipe, ...]
    weights: np.ndarray
    residual: float
    k_max: int = 4
    seed: int | None = None
    threshold: float = THRESHOLD
    generator: str = GENERATOR_ID
    attempt: int | None = None
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)
    _mapped: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def values(self) -> np.ndarray:
        """Realized sequences, shape (N, n); regenerated from recipes if needed."""
        if self._values is None:
            self._values = sequence_matrix(self.recipes)
        return self._values

    def transformed(self, dist: DistributionSpec) -> np.ndarray:
        """Sequences pushed through ``dist``'s quantile (cached per distribution)."""
        x = self._mapped.get(dist)
        if x is None:
            x = self._mapped[dist] = dist.quantile(self.values)
        return x

    @property
    def qualified(self) -> bool:
        return self.residual < self.threshold

    def resolve(self, tie_break="spread", pairs=()) -> WeightSolution:
        problem = CalibrationProblem(self.dist, self.n, self.recipes, self.k_max, tuple(pairs))
        a, b = build_system(problem, self.values)
        return solve_weights(a, b, pairs, self.threshold, tie_break)

    def to_dict(self) -> dict:
        d = {
            "dist": self.dist.token,
            "n": self.n,
            "kMax": self.k_max,
            "seed": self.seed,
            "threshold": self.threshold,
            "residual": float(self.residual),
            "recipes": [r.to_dict() for r in self.recipes],
            "weights": [float(w) for w in self.weights],
        }
        if self.attempt is not None:
            d["attempt"] = self.attempt
        return d

    @classmethod
    def from_dict(cls, d: dict, generator: str = GENERATOR_ID) -> "CalibratedSet":
        return cls(
            dist=parse_dist(d["dist"]),
            n=int(d["n"]),
            recipes=tuple(recipe_from_dict(r) for r in d["recipes"]),
            weights=np.asarray(d["weights"], dtype=float),
            residual=float(d["residual"]),
            k_max=int(d.get("kMax", 4)),
            seed=d.get("seed"),
            threshold=float(d.get("threshold", THRESHOLD)),
            generator=generator,
            attempt=d.get("attempt"),
        )


@dataclass
class SetPool:
    label: str
    sets: list[CalibratedSet] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def at(self, n: int) -> "SetPool":
        return SetPool(self.label, [s for s in self.sets if s.n == n], dict(self.meta))

    def head(self, count: int) -> "SetPool":
        return SetPool(self.label, self.sets[:count], dict(self.meta))

    @property
    def sizes(self) -> list[int]:
        return sorted({s.n for s in self.sets})

    @property
    def n_sequences(self) -> int:
        return sum(len(s.recipes) for s in self.sets)

    @classmethod
    def combine(cls, label: str, *pools: "SetPool") -> "SetPool":
        sets = [s for p in pools for s in p.sets]
        return cls(label, sets, {"parts": [p.label for p in pools]})

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "generator": GENERATOR_ID,
            "version": __version__,
            "meta": self.meta,
            "sets": [s.to_dict() for s in self.sets],
        }

    def to_json(self) -> str:
        return dumps_json(self.to_dict())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "SetPool":
        gen = d.get("generator", GENERATOR_ID)
        return cls(d["label"], [CalibratedSet.from_dict(s, gen) for s in d["sets"]], dict(d.get("meta", {})))

    @classmethod
    def load(cls, path) -> "SetPool":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(loads_json(fh.read()))


def calibrate(dist, recipes, k_max=4, pairs=(), threshold=THRESHOLD, tie_break="spread", seed=None) -> CalibratedSet:
    """Solve one sequence set against ``dist`` and wrap the result."""
    dist = parse_dist(dist)
    recipes = tuple(recipes)
    n = recipes[0].n
    problem = CalibrationProblem(dist, n, recipes, k_max, tuple(pairs))
    values = sequence_matrix(recipes)
    a, b = build_system(problem, values)
    sol = solve_weights(a, b, pairs, threshold, tie_break)
    return CalibratedSet(dist, n, recipes, sol.weights, sol.residual, k_max, seed, threshold, _values=values)


def calibrate_designed(dist, n: int, seed: int, threshold=THRESHOLD, tie_break="sparse", k_max=4) -> CalibratedSet:
    """Weights for the twelve designed sequences with the four mirror pairs tied."""
    return calibrate(dist, designed_recipes(n, seed), k_max, DESIGNED_PAIRS, threshold, tie_break, seed)


def bar_recipes(n: int, seed: int, attempt: int) -> tuple[SequenceRecipe, ...]:
    """Candidate ``attempt``: arithmetic, U-shaped beta and ten fresh random streams."""
    base = (Arithmetic(n), BetaQuantile(n, BETA_U, BETA_U))
    return base + tuple(PseudoRandom(n, seed, attempt * BAR_RANDOM + j + 1) for j in range(BAR_RANDOM))


def bar_search(
    dist,
    n: int,
    n_sets: int,
    seed: int,
    threshold: float = THRESHOLD,
    max_attempts: int | None = None,
    tie_break: str = "spread",
    k_max: int = 4,
    label: str | None = None,
) -> SetPool:
    """Draw candidate sets until ``n_sets`` of them qualify.

    Candidates are numbered; candidate ``a`` uses random streams
    ``10a+1 .. 10a+10`` of ``seed``, so the pool depends only on the inputs.
    """
    dist = parse_dist(dist)
    if n < 5:
        raise DomainError("the stochastic search needs n >= 5")
    if n_sets < 1:
        raise DomainError("n_sets must be >= 1")
    if max_attempts is None:
        max_attempts = 100_000 * n_sets
    target = _target(dist, n, k_max)
    base = np.vstack([_realize(Arithmetic(n)), _realize(BetaQuantile(n, BETA_U, BETA_U))])
    base_x = dist.quantile(base)
    base_rows = np.vstack([moment_rows(base_x, k_max), np.ones(2)])
    sets: list[CalibratedSet] = []
    attempt = 0
    while len(sets) < n_sets and attempt < max_attempts:
        rand = np.vstack([
            np.sort(uniform_stream(seed, attempt * BAR_RANDOM + j + 1, n)) for j in range(BAR_RANDOM)
        ])
        rows = np.vstack([moment_rows(dist.quantile(rand), k_max), np.ones(BAR_RANDOM)])
        a = np.hstack([base_rows, rows])
        # Infeasible candidates are discarded, so only pay for the tie-break on the rest.
        sol = solve_weights(a, target, (), threshold, "sparse")
        if sol.feasible and tie_break != "sparse":
            sol = solve_weights(a, target, (), threshold, tie_break)
        if sol.feasible:
            sets.append(
                CalibratedSet(
                    dist, n, bar_recipes(n, seed, attempt), sol.weights, sol.residual,
                    k_max, seed, threshold, attempt=attempt, _values=np.vstack([base, rand]),
                )
            )
        attempt += 1
    meta = {
        "dist": dist.token,
        "n": n,
        "seed": seed,
        "attempts": attempt,
        "qualified": len(sets),
        "acceptance_rate": len(sets) / attempt if attempt else 0.0,
        "tie_break": tie_break,
    }
    pool = SetPool(label or "BAR", sets, meta)
    if len(sets) < n_sets:
        raise SearchExhausted(
            f"only {len(sets)} of {n_sets} sets qualified for {dist.token}, n={n} "
            f"after {attempt} attempts",
            partial=pool,
        )
    return pool


def multi_dist_pool(specs, sets_per_spec: int, n: int, seed: int, label: str = "BAR-multi", **kwargs) -> SetPool:
    """Run :func:`bar_search` for each spec (seed derived per spec) and pool."""
    specs = [parse_dist(s) for s in specs]
    if not specs:
        raise DomainError("multi_dist_pool needs at least one distribution")
    pools = [bar_search(s, n, sets_per_spec, derive_seed(seed, i), **kwargs) for i, s in enumerate(specs)]
    pool = SetPool.combine(label, *pools)
    pool.meta = {"dists": [s.token for s in specs], "sets_per_spec": sets_per_spec, "n": n, "seed": seed}
    return pool
