"""scikit-learn style wrapper: estimate a finite-sample correction factor, then apply it."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calib import THRESHOLD, bar_search
from .dist import parse_dist
from .estimate import parse_estimator, weighted_expectation
from .exceptions import DimensionError, UnsupportedError

__all__ = ["FiniteSampleCorrector"]


def _population_value(dist, name):
    mv = dist.central_moments()
    if name == "sd":
        return math.sqrt(mv.mu2)
    if name == "mean":
        return mv.mean
    if name == "median":
        return float(dist.quantile(0.5))
    if name in ("u2", "u3", "u4"):
        return mv[int(name[1]) - 1]
    raise UnsupportedError(f"no population counterpart for estimator {name!r}")


class FiniteSampleCorrector(TransformerMixin, BaseEstimator):
    """Multiplicative small-sample correction of a per-row statistic.

    ``fit`` reads the sample size from the number of columns, calibrates
    ``n_sets`` sequence sets against ``dist`` and stores
    ``factor_ = E[statistic] / population value`` as estimated from the pool.
    ``transform`` returns ``statistic(row) / factor_`` for every row, e.g. the
    unbiased-sd correction when ``statistic="sd"`` and ``dist="gaussian"``.

    The rows themselves are not used to fit anything; the factor depends on
    the model family and ``n`` only.
    """

    def __init__(self, dist="gaussian", statistic="sd", n_sets=10, seed=0, threshold=THRESHOLD):
        self.dist = dist
        self.statistic = statistic
        self.n_sets = n_sets
        self.seed = seed
        self.threshold = threshold

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=2)
        dist = parse_dist(self.dist)
        est = parse_estimator(self.statistic)
        n = X.shape[1]
        ref = _population_value(dist, est.name)
        if ref == 0:
            raise UnsupportedError("population value is zero; a multiplicative factor is undefined")
        self.pool_ = bar_search(dist, n, self.n_sets, self.seed, self.threshold)
        self.expected_ = weighted_expectation(self.pool_, dist, est, n)
        self.factor_ = self.expected_ / ref
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "factor_")
        X = check_array(X, ensure_min_features=2)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(f"fitted for samples of size {self.n_features_in_}, got {X.shape[1]}")
        values = np.asarray(parse_estimator(self.statistic)(X), dtype=float)
        return (values / self.factor_).reshape(-1, 1)
