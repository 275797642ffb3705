"""
Distances between samples: two-sample Kolmogorov-Smirnov and the Ky Fan
distance of convergence in measure.
"""
from typing import Sequence

import numpy as np
from scipy import stats

from core.errors import ArgumentError


def ks_distance(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """
    Two-sample Kolmogorov-Smirnov statistic: sup of the empirical-cdf gap.

    Raises:
        ArgumentError: either sample empty
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ArgumentError(f"KS distance needs two nonempty samples, got sizes {a.size} and {b.size}")
    return float(stats.ks_2samp(a, b).statistic)


def in_measure_distance(deviations: Sequence[float]) -> float:
    """
    inf{eps >= 0 : P(d > eps) <= eps} for the empirical law of ``deviations``.

    Small values mean the deviation is small except on a set of small probability.
    """
    d = np.sort(np.asarray(deviations, dtype=float).ravel())
    if d.size == 0:
        raise ArgumentError("in-measure distance needs a nonempty sample")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise ArgumentError("deviations must be finite and nonnegative")
    n = d.size
    k = np.arange(n + 1)
    lower = np.concatenate(([0.0], d))
    upper = np.concatenate((d, [np.inf]))
    candidate = np.maximum(lower, (n - k) / n)
    valid = candidate < upper
    return float(candidate[valid].min())
