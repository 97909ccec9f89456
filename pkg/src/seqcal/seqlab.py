"""Deterministic sequences on (0, 1) and the twelve-sequence designed set.

Every sequence is described by a recipe (a small frozen dataclass) and
realized as a sorted :class:`UnitSequence`. Realization is a pure function of
the recipe, so recipes are what gets persisted; values are regenerated on
demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar

import numpy as np
from scipy import special

from .exceptions import DimensionError, DomainError, ParameterError

__all__ = [
    "GENERATOR_ID",
    "SequenceRecipe",
    "Arithmetic",
    "BetaQuantile",
    "SelfMixture",
    "ArithMixture",
    "PseudoRandom",
    "Complement",
    "Reflected",
    "UnitSequence",
    "arithmetic",
    "beta_quantile_seq",
    "reflect",
    "self_mixture_seq",
    "arith_mixture_seq",
    "pseudo_random_seq",
    "complement_seq",
    "designed_recipes",
    "designed_12",
    "DESIGNED_PAIRS",
    "BETA_U",
    "recipe_from_dict",
    "uniform_stream",
    "kolmogorov_distance",
]

GENERATOR_ID = "numpy.PCG64/SeedSequence(seed,spawn_key=(stream,))/raw>>11"

BETA_U = 0.547
COMPLEMENT_BINS = 1024

# Reflection pairs inside the designed set (0-based positions).
DESIGNED_PAIRS = ((2, 3), (4, 5), (6, 7), (8, 9))


def _check_n(n, minimum=1):
    if int(n) != n or n < minimum:
        raise DomainError(f"sequence length must be an integer >= {minimum}, got {n}")
    return int(n)


def _check_shape(*shapes):
    for s in shapes:
        if not (np.isfinite(s) and s > 0):
            raise ParameterError(f"beta shape parameters must be > 0, got {s}")


def _check_orientation(orientation):
    if orientation not in ("left", "right"):
        raise ParameterError(f"orientation must be 'left' or 'right', got {orientation!r}")


class SequenceRecipe:
    """Base for recipes. Subclasses are frozen dataclasses with a ``kind``."""

    kind: ClassVar[str] = ""

    def generate(self) -> "UnitSequence":
        return UnitSequence(_realize(self), self)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Arithmetic(SequenceRecipe):
    n: int
    kind: ClassVar[str] = "arithmetic"

    def __post_init__(self):
        _check_n(self.n)

    def _values(self):
        return np.arange(1, self.n + 1) / (self.n + 1)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n}


@dataclass(frozen=True)
class BetaQuantile(SequenceRecipe):
    n: int
    alpha: float
    beta: float
    kind: ClassVar[str] = "beta_quantile"

    def __post_init__(self):
        _check_n(self.n)
        _check_shape(self.alpha, self.beta)

    def _values(self):
        return special.betaincinv(self.alpha, self.beta, _grid(self.n))

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta, "n": self.n}


def _split_grid(n, lower_q, upper_q):
    # Lower ceil(n/2) points in (0, 1/2), upper floor(n/2) points in (1/2, 1).
    lo = 0.5 * lower_q(_grid((n + 1) // 2))
    hi = 0.5 + 0.5 * upper_q(_grid(n // 2))
    return np.sort(np.concatenate([lo, hi]))


def _sym_beta(a):
    return lambda u: special.betaincinv(a, a, u)


@dataclass(frozen=True)
class SelfMixture(SequenceRecipe):
    n: int
    a1: float
    a2: float
    orientation: str = "left"
    kind: ClassVar[str] = "self_mixture"

    def __post_init__(self):
        _check_n(self.n, 2)
        _check_shape(self.a1, self.a2)
        _check_orientation(self.orientation)

    def _values(self):
        x = _split_grid(self.n, _sym_beta(self.a1), _sym_beta(self.a2))
        return x if self.orientation == "left" else _reflect_values(x)

    def to_dict(self):
        return {
            "kind": self.kind,
            "a1": self.a1,
            "a2": self.a2,
            "orientation": self.orientation,
            "n": self.n,
        }


@dataclass(frozen=True)
class ArithMixture(SequenceRecipe):
    n: int
    alpha: float
    orientation: str = "left"
    kind: ClassVar[str] = "arith_mixture"

    def __post_init__(self):
        _check_n(self.n, 2)
        _check_shape(self.alpha)
        _check_orientation(self.orientation)

    def _values(self):
        x = _split_grid(self.n, _sym_beta(self.alpha), lambda u: u)
        return x if self.orientation == "left" else _reflect_values(x)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "orientation": self.orientation, "n": self.n}


def uniform_stream(seed: int, stream_index: int, size: int) -> np.ndarray:
    """``size`` doubles in the open interval (0, 1) from one PCG64 stream.

    Uses the raw 64-bit output (whose bit stream numpy keeps stable across
    releases), keeps the top 53 bits and centres them in their cell.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_index),))
    raw = np.random.PCG64(ss).random_raw(int(size))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) / 9007199254740992.0


@dataclass(frozen=True)
class PseudoRandom(SequenceRecipe):
    n: int
    seed: int
    stream_index: int = 0
    kind: ClassVar[str] = "pseudo_random"

    def __post_init__(self):
        _check_n(self.n)
        if int(self.seed) < 0 or int(self.stream_index) < 0:
            raise ParameterError("seed and stream index must be non-negative")

    def _values(self):
        return np.sort(uniform_stream(self.seed, self.stream_index, self.n))

    def to_dict(self):
        return {"kind": self.kind, "seed": self.seed, "stream_index": self.stream_index, "n": self.n}


@dataclass(frozen=True)
class Complement(SequenceRecipe):
    n: int
    siblings: tuple[SequenceRecipe, ...] = field(default=())
    kind: ClassVar[str] = "complement"

    def __post_init__(self):
        _check_n(self.n)
        if not self.siblings:
            raise DimensionError("complement needs at least one sibling")
        if any(s.n != self.n for s in self.siblings):
            raise DimensionError("all siblings must have the complement's length")

    def _values(self):
        return _complement_values(self.n, [_realize(s) for s in self.siblings])

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "siblings": [s.to_dict() for s in self.siblings]}


@dataclass(frozen=True)
class Reflected(SequenceRecipe):
    base: SequenceRecipe
    kind: ClassVar[str] = "reflected"

    @property
    def n(self):
        return self.base.n

    def _values(self):
        return _reflect_values(_realize(self.base))

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict()}


_KINDS = {
    cls.kind: cls
    for cls in (Arithmetic, BetaQuantile, SelfMixture, ArithMixture, PseudoRandom, Complement, Reflected)
}


def recipe_from_dict(d: dict) -> SequenceRecipe:
    """Inverse of ``recipe.to_dict()``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ParameterError(f"unknown sequence kind {kind!r}")
    if kind == "complement":
        d["siblings"] = tuple(recipe_from_dict(s) for s in d["siblings"])
    elif kind == "reflected":
        d["base"] = recipe_from_dict(d["base"])
    return _KINDS[kind](**d)


@lru_cache(maxsize=4096)
def _realize_cached(recipe):
    values = np.asarray(recipe._values(), dtype=float)
    values.setflags(write=False)
    return values


def _realize(recipe: SequenceRecipe) -> np.ndarray:
    if isinstance(recipe, PseudoRandom):
        # One-off streams would only churn the cache.
        values = recipe._values()
        values.setflags(write=False)
        return values
    return _realize_cached(recipe)


@dataclass(frozen=True, eq=False)
class UnitSequence:
    """Sorted values in (0, 1) together with the recipe that produced them."""

    values: np.ndarray
    recipe: SequenceRecipe | None = None

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _grid(n):
    return np.arange(1, n + 1) / (n + 1)


def _reflect_values(x):
    return np.sort(1.0 - np.asarray(x, dtype=float))


def arithmetic(n: int) -> UnitSequence:
    """The grid ``i/(n+1)``, i = 1..n."""
    return Arithmetic(_check_n(n)).generate()


def beta_quantile_seq(n: int, alpha: float, beta: float) -> UnitSequence:
    """The arithmetic grid pushed through the Beta(alpha, beta) quantile."""
    return BetaQuantile(_check_n(n), float(alpha), float(beta)).generate()


def reflect(seq: UnitSequence) -> UnitSequence:
    """``1 - x`` for every point, re-sorted."""
    values = seq.values if isinstance(seq, UnitSequence) else np.asarray(seq, dtype=float)
    recipe = getattr(seq, "recipe", None)
    if isinstance(recipe, Reflected):
        recipe = recipe.base
    elif recipe is not None:
        recipe = Reflected(recipe)
    return UnitSequence(_reflect_values(values), recipe)


def self_mixture_seq(n: int, a1: float, a2: float, orientation: str = "left") -> UnitSequence:
    """Two symmetric betas side by side: Beta(a1, a1) on the lower half grid,
    Beta(a2, a2) on the upper half. ``right`` is the mirror image of ``left``.
    """
    return SelfMixture(_check_n(n, 2), float(a1), float(a2), orientation).generate()


def arith_mixture_seq(n: int, alpha: float, orientation: str = "left") -> UnitSequence:
    """Like :func:`self_mixture_seq` with Beta(alpha, alpha) on the lower half
    and the plain arithmetic grid on the upper half."""
    return ArithMixture(_check_n(n, 2), float(alpha), orientation).generate()


def pseudo_random_seq(n: int, seed: int, stream_index: int = 0) -> UnitSequence:
    return PseudoRandom(_check_n(n), int(seed), int(stream_index)).generate()


def complement_seq(n: int, siblings) -> UnitSequence:
    """Sequence filling the regions the equal-weight sibling pool leaves thin.

    Each sibling is read as a piecewise-linear CDF through ``(0, 0)``,
    ``(x_i, i/(n+1))`` and ``(1, 1)``. The pooled density is binned on a
    1024-cell grid and the complement density is the water-filled deficit
    ``max(0, c - g)``, with ``c`` chosen so that the deficit holds exactly one
    sequence's share of mass. The output is that density's quantiles at the
    arithmetic grid.
    """
    n = _check_n(n)
    siblings = list(siblings)
    if not siblings:
        raise DimensionError("complement needs at least one sibling")
    if any(len(s) != n for s in siblings):
        raise DimensionError("all siblings must have length n")
    recipes = [getattr(s, "recipe", None) for s in siblings]
    if all(r is not None for r in recipes):
        return Complement(n, tuple(recipes)).generate()
    return UnitSequence(_complement_values(n, [np.asarray(s, dtype=float) for s in siblings]))


def _complement_values(n, sibling_values, bins=COMPLEMENT_BINS):
    edges = np.linspace(0.0, 1.0, bins + 1)
    knots_y = np.concatenate([[0.0], _grid(n), [1.0]])
    mass = np.zeros(bins)
    for x in sibling_values:
        knots_x = np.concatenate([[0.0], np.asarray(x, dtype=float), [1.0]])
        mass += np.diff(np.interp(edges, knots_x, knots_y))
    k = len(sibling_values)
    density = mass * bins / k

    # Water level c with sum(max(0, c - g)) / bins == 1 / k.
    g = np.sort(density)
    target = bins / k
    csum = np.cumsum(g)
    level = g[-1] + (target - (g[-1] * bins - csum[-1])) / bins
    for j in range(1, bins + 1):
        c = (target + csum[j - 1]) / j
        if j == bins or c <= g[j]:
            level = c
            break
    deficit = np.maximum(0.0, level - density)
    cdf = np.concatenate([[0.0], np.cumsum(deficit)])
    cdf /= cdf[-1]
    return np.interp(_grid(n), cdf, edges)


def designed_recipes(n: int, seed: int) -> list[SequenceRecipe]:
    """Recipes of the twelve designed sequences, in their fixed order."""
    n = _check_n(n, 5)
    recipes: list[SequenceRecipe] = [
        Arithmetic(n),
        BetaQuantile(n, BETA_U, BETA_U),
        BetaQuantile(n, 46.761, 20.108),
        BetaQuantile(n, 20.108, 46.761),
        BetaQuantile(n, 0.478, 38.53),
        BetaQuantile(n, 38.53, 0.478),
        SelfMixture(n, 0.369, 18.933, "left"),
        SelfMixture(n, 0.369, 18.933, "right"),
        ArithMixture(n, 0.328, "left"),
        ArithMixture(n, 0.328, "right"),
        PseudoRandom(n, int(seed), 0),
    ]
    recipes.append(Complement(n, tuple(recipes)))
    return recipes


def designed_12(n: int, seed: int) -> list[UnitSequence]:
    return [r.generate() for r in designed_recipes(n, seed)]


def kolmogorov_distance(values) -> float:
    """Sup distance between the empirical CDF of ``values`` and Uniform(0, 1)."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    m = len(x)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - x), np.max(x - (i - 1) / m)))
