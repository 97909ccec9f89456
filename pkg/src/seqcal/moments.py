"""Sample central moments, their exact expectations, and unbiased h-statistics."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import DomainError, UnsupportedError

__all__ = [
    "SampleMoments",
    "sample_moments",
    "sample_central_moment",
    "expected_sample_central_moment",
    "u_central_moment",
]


class SampleMoments(NamedTuple):
    n: int
    m1: float
    m2: float
    m3: float
    m4: float


def _as_sample(xs, axis=-1):
    x = np.asarray(xs, dtype=float)
    if x.size == 0 or x.shape[axis] == 0:
        raise DomainError("sample must be non-empty")
    return x


def _check_order(k, allowed):
    if k not in allowed:
        raise UnsupportedError(f"moment order must be one of {tuple(allowed)}, got {k}")


def sample_central_moment(xs, k: int, axis: int = -1):
    """Plug-in moment ``(1/n) sum (x - mean)^k``; ``k=1`` returns the mean.

    Two passes (mean first, then deviations). Works along ``axis`` for stacked
    samples.
    """
    _check_order(k, (1, 2, 3, 4))
    x = _as_sample(xs, axis)
    mean = np.mean(x, axis=axis, keepdims=True)
    if k == 1:
        return np.squeeze(mean, axis=axis)[()]
    return np.mean((x - mean) ** k, axis=axis)[()]


def sample_moments(xs) -> SampleMoments:
    x = _as_sample(xs).ravel()
    d = x - x.mean()
    d2 = d * d
    return SampleMoments(len(x), float(x.mean()), float(d2.mean()), float((d2 * d).mean()), float((d2 * d2).mean()))


_MIN_N = {1: 1, 2: 2, 3: 3, 4: 4}


def expected_sample_central_moment(mv, n: int, k: int) -> float:
    """E[m_k] for an iid sample of size ``n`` from a law with moments ``mv``.

    ``mv`` is ``(mean, mu2, mu3, mu4)``.
    """
    _check_order(k, (1, 2, 3, 4))
    if int(n) != n or n < _MIN_N[k]:
        raise DomainError(f"E[m_{k}] needs n >= {_MIN_N[k]}, got {n}")
    mean, mu2, mu3, mu4 = (float(v) for v in mv)
    if k == 1:
        return mean
    if k == 2:
        return (n - 1) / n * mu2
    if k == 3:
        return (n - 1) * (n - 2) / n**2 * mu3
    return (n - 1) / n**3 * ((n * n - 3 * n + 3) * mu4 + 3 * (2 * n - 3) * mu2 * mu2)


def u_central_moment(xs, k: int, axis: int = -1):
    """Unbiased estimator of the k-th central moment (h-statistic), k = 2..4."""
    _check_order(k, (2, 3, 4))
    x = _as_sample(xs, axis)
    n = x.shape[axis]
    if n < _MIN_N[k]:
        raise DomainError(f"h-statistic of order {k} needs n >= {_MIN_N[k]}, got {n}")
    m2 = sample_central_moment(x, 2, axis)
    if k == 2:
        return n / (n - 1) * m2
    if k == 3:
        return n * n / ((n - 1) * (n - 2)) * sample_central_moment(x, 3, axis)
    m4 = sample_central_moment(x, 4, axis)
    return n * ((n * n - 2 * n + 3) * m4 - 3 * (2 * n - 3) * m2 * m2) / ((n - 1) * (n - 2) * (n - 3))
