"""
Exact first passage of a one-dimensional Brownian motion to a point.

From distance a with variance rate sigma^2 the hitting time is distributed as
a^2 / (sigma^2 Z^2), Z standard normal.
"""

from typing import Callable

import numpy as np

from membrane.simulate.density import MeanEstimate, mean_estimate
from membrane.simulate.rng import chunk_generator


def sample_hitting_times(distance: float, sigma2: float, n: int, seed: int = 0) -> np.ndarray:
    rng = chunk_generator(seed, 0)
    z = rng.standard_normal(n)
    return distance**2 / (sigma2 * np.maximum(z**2, 1e-300))


def expected_boundary_value(
    h: Callable[[np.ndarray], np.ndarray],
    t: float,
    distance: float,
    sigma2: float,
    n: int,
    seed: int = 0,
) -> MeanEstimate:
    """E[h(t + T)] with T the hitting time of S from `distance` away; h(inf) = 0."""
    hits = t + sample_hitting_times(distance, sigma2, n, seed)
    values = np.where(np.isfinite(hits), np.asarray(h(hits), dtype=float), 0.0)
    return mean_estimate(values)
