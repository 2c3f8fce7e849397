"""
The fixed statistical protocol: per-checkpoint z-tests, Bonferroni across the
family, family level 1%.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

FAMILY_LEVEL = 0.01
# Submartingale increments may sit this many standard errors below zero.
ONE_SIDED_SE = 3.0


def critical_value(n_tests: int, level: float = FAMILY_LEVEL) -> float:
    """Two-sided Bonferroni critical |z| for a family of n_tests."""
    n_tests = max(int(n_tests), 1)
    return float(stats.norm.ppf(1.0 - level / (2.0 * n_tests)))


def bonferroni(p_values, level: float = FAMILY_LEVEL) -> bool:
    """True when no p-value falls below level / m."""
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size == 0:
        return True
    return bool(np.all(p >= level / p.size))


def z_scores(means, stderrs) -> np.ndarray:
    """mean / SE; a zero SE with a zero mean counts as z = 0."""
    means = np.asarray(means, dtype=float)
    stderrs = np.asarray(stderrs, dtype=float)
    exact = np.isclose(means, 0.0, atol=1e-13)
    safe = np.where(stderrs > 0, stderrs, 1.0)
    return np.where(stderrs > 0, means / safe, np.where(exact, 0.0, np.sign(means) * np.inf))


@dataclass
class IncrementStats:
    means: np.ndarray
    stderrs: np.ndarray
    n: int

    @property
    def z(self) -> np.ndarray:
        return z_scores(self.means, self.stderrs)


def increment_stats(process: np.ndarray, indices) -> IncrementStats:
    """Mean and SE of process[:, k_{j+1}] - process[:, k_j] over paths, consecutive indices."""
    indices = np.asarray(indices, dtype=int)
    increments = process[:, indices[1:]] - process[:, indices[:-1]]
    n = increments.shape[0]
    means = increments.mean(axis=0)
    stderrs = increments.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(len(means), np.inf)
    return IncrementStats(means, stderrs, n)


def ks_test(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """(statistic, p-value) of the one-sample Kolmogorov-Smirnov test."""
    res = stats.kstest(np.asarray(samples, dtype=float).ravel(), cdf)
    return float(res.statistic), float(res.pvalue)
