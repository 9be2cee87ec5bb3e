"""
Statistical Utilities

Two-sample Kolmogorov-Smirnov distances and critical values, Monte Carlo
standard errors and the monotone-trend acceptance rule.
"""

import math
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import ParameterError


def ks_distance(sample_a, sample_b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a = np.sort(np.asarray(sample_a, dtype=float).ravel(), kind="stable")
    b = np.sort(np.asarray(sample_b, dtype=float).ravel(), kind="stable")
    if a.size == 0 or b.size == 0:
        raise ParameterError("KS distance needs two nonempty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic critical value c(alpha) sqrt((n + m) / (n m))."""
    if n <= 0 or m <= 0:
        raise ParameterError("sample sizes must be positive")
    c = float(stats.kstwobign.ppf(1.0 - alpha))
    return c * math.sqrt((n + m) / (n * m))


def mean_and_se(sample) -> tuple[float, float]:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise ParameterError("need at least two values for a standard error")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def combined_se(*errors: float) -> float:
    return math.sqrt(sum(e * e for e in errors))


def complex_mean_and_se(sample) -> tuple[complex, float]:
    """Mean of complex draws and the standard error of its modulus."""
    x = np.asarray(sample, dtype=complex).ravel()
    if x.size < 2:
        raise ParameterError("need at least two values for a standard error")
    var = x.real.var(ddof=1) + x.imag.var(ddof=1)
    return complex(x.mean()), math.sqrt(var / x.size)


def quantile_agreement(sample_a, sample_b, q: float) -> tuple[float, float]:
    """|F_b(Q_a(q)) - q| and its standard error on the probability scale."""
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("quantile comparison needs two nonempty samples")
    level = np.quantile(a, q)
    statistic = abs(float(np.mean(b <= level)) - q)
    return statistic, math.sqrt(q * (1.0 - q) * (1.0 / a.size + 1.0 / b.size))


def proportion_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n > 0 else math.inf


def max_increment(values: Sequence[float]) -> float:
    """Largest step up along a sequence; <= slack means non-increasing."""
    values = list(values)
    if len(values) < 2:
        return -math.inf
    return max(b - a for a, b in zip(values, values[1:]))
