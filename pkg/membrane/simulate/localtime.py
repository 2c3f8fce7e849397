"""
The local-time functional eta estimated by eps-band occupation.

eta(s) = (1/2 eps) * Lebesgue time in [0, s] with d(x0(u), S) < eps. Within a
step the signed distance is interpolated linearly, which is exact for linear
paths. The estimator is biased by O(eps); `estimate_eta_extrapolated` removes
the leading term with a two-width Richardson step.
"""

import logging

import numpy as np

from membrane.model.surface import Surface
from membrane.simulate.paths import PathBundle

logger = logging.getLogger(__name__)


def band_fraction(a, b, eps: float) -> np.ndarray:
    """
    Fraction of u in [0, 1] with |a + u (b - a)| < eps.

    a and b are signed distances at the ends of a step (already unfolded so
    that a side change shows as a sign change).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = b - a
    flat = np.abs(diff) < 1e-300
    safe = np.where(flat, 1.0, diff)
    u1 = (-eps - a) / safe
    u2 = (eps - a) / safe
    lo = np.maximum(np.minimum(u1, u2), 0.0)
    hi = np.minimum(np.maximum(u1, u2), 1.0)
    moving = np.clip(hi - lo, 0.0, 1.0)
    return np.where(flat, (np.abs(a) < eps).astype(float), moving)


def unfolded_distances(path: PathBundle, surface: Surface) -> tuple[np.ndarray, np.ndarray]:
    """Per-step (start, end) signed distances with recorded crossings restored."""
    sd = surface.signed_distance(path.base_states)
    start = sd[:, :-1]
    end = sd[:, 1:]
    if path.crossed is None:
        return start, end
    # A resampled side keeps |sd|; restore the sign the Euler increment produced.
    sign_start = np.where(start != 0.0, np.sign(start), np.sign(end))
    end = np.where(path.crossed, -sign_start * np.abs(end), sign_start * np.abs(end))
    return start, np.where(start == 0.0, sd[:, 1:], end)


def band_fractions(path: PathBundle, surface: Surface, eps: float) -> np.ndarray:
    """(n, K) fraction of each base step spent in the eps-band."""
    start, end = unfolded_distances(path, surface)
    return band_fraction(start, end, eps)


def estimate_eta(path: PathBundle, surface: Surface, eps: float) -> np.ndarray:
    """eta on the base grid, shape (n, K+1), starting at 0 and nondecreasing."""
    if not eps > 0:
        raise ValueError(f"band width must be positive, got {eps}")
    ds = np.diff(path.base_times)
    frac = band_fractions(path, surface, eps)
    increments = frac * ds / (2.0 * eps)
    eta = np.zeros((path.n_paths, len(path.base_times)))
    np.cumsum(increments, axis=1, out=eta[:, 1:])
    return eta


def estimate_eta_extrapolated(path: PathBundle, surface: Surface, eps: float) -> np.ndarray:
    """Richardson combination 2 eta(eps/2) - eta(eps), clipped to stay nondecreasing."""
    coarse = estimate_eta(path, surface, eps)
    fine = estimate_eta(path, surface, 0.5 * eps)
    combined = 2.0 * fine - coarse
    # The combination can dip by noise; keep eta a valid nondecreasing functional.
    return np.maximum.accumulate(np.maximum(combined, 0.0), axis=1)


def attach_eta(path: PathBundle, surface: Surface, eps: float, extrapolate: bool = False) -> PathBundle:
    path.eta = (estimate_eta_extrapolated if extrapolate else estimate_eta)(path, surface, eps)
    path.eps = eps
    return path
