"""
Ensemble functionals: histogram density of x(t), Laplace functionals, CDF
distances.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats

from membrane.errors import SchemeError

MIN_DENSITY_SAMPLES = 1000


@dataclass
class DensityTable:
    """Histogram estimate of a one-dimensional law with per-bin binomial errors."""

    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    n_samples: int
    kde: Optional[np.ndarray] = None
    # probability of the samples that fell outside the binned range
    outside_mass: float = 0.0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.widths))

    def bin_probabilities(self) -> np.ndarray:
        return self.density * self.widths

    def to_rows(self) -> list[dict]:
        rows = []
        for lo, hi, p, se in zip(self.edges[:-1], self.edges[1:], self.density, self.stderr):
            rows.append({"lo": float(lo), "hi": float(hi), "density": float(p), "stderr": float(se)})
        return rows


def empirical_density(
    samples,
    bins=100,
    value_range: Optional[tuple[float, float]] = None,
    kde: bool = False,
) -> DensityTable:
    """
    Histogram of scalar samples (or of the first coordinate of points),
    normalised by the total sample count. With an explicit value_range the
    histogram mass is 1 - outside_mass, so bins stay comparable with a density.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim > 1:
        x = x[..., 0]
    x = x[np.isfinite(x)].ravel()
    if x.size == 0:
        raise SchemeError("empty ensemble")
    if x.size < MIN_DENSITY_SAMPLES:
        raise SchemeError(f"density estimates need at least {MIN_DENSITY_SAMPLES} samples, got {x.size}")
    if value_range is None:
        value_range = (float(x.min()), float(x.max()))
    counts, edges = np.histogram(x, bins=bins, range=value_range)
    n = x.size
    widths = np.diff(edges)
    p = counts / n
    density = p / widths
    stderr = np.sqrt(p * (1.0 - p) / n) / widths
    smooth = stats.gaussian_kde(x)(0.5 * (edges[:-1] + edges[1:])) if kde else None
    return DensityTable(
        edges=edges,
        density=density,
        stderr=stderr,
        n_samples=n,
        kde=smooth,
        outside_mass=float(1.0 - counts.sum() / n),
    )


def ks_distance_to(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup distance between the empirical CDF of samples and a reference CDF."""
    x = np.asarray(samples, dtype=float).ravel()
    return float(stats.kstest(x, cdf).statistic)


def two_sample_ks(a, b) -> tuple[float, float]:
    """(statistic, p-value) of the two-sample Kolmogorov-Smirnov test."""
    res = stats.ks_2samp(np.asarray(a, dtype=float).ravel(), np.asarray(b, dtype=float).ravel())
    return float(res.statistic), float(res.pvalue)


@dataclass
class MeanEstimate:
    mean: float
    stderr: float
    n: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n}


def mean_estimate(values) -> MeanEstimate:
    v = np.asarray(values, dtype=float).ravel()
    v = v[np.isfinite(v)]
    if v.size < 2:
        raise SchemeError("need at least two samples for a standard error")
    return MeanEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)), int(v.size))
