"""
Random time change and the boundary process.

A(s) = s + int_0^s r(x0(u)) d eta(u) is accumulated with left-endpoint sums on
the base grid. Inside base step k the physical clock first spends the delay
r_k d eta_k holding the path at the projection onto S of the step end nearest
to S, then runs the diffusive part. On the physical grid t_m = m dt:

    zeta_t   generalized inverse of A (first s with A(s) >= t),
    x(t)     x0(zeta_t), or the hold point during a delay,
    gamma(t) eta(zeta_t), growing linearly through a delay so that
             r d gamma equals the held time.
"""

import logging
from typing import Optional

import numpy as np

from membrane.errors import SurfaceError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import ON_TOLERANCE, Surface
from membrane.simulate.paths import BoundaryPath, PathBundle

logger = logging.getLogger(__name__)


def operational_clock(path: PathBundle, spec: DiffusionSpec, surface: Surface) -> tuple[np.ndarray, np.ndarray]:
    """A(s_k) and the per-step delays r(z_k) d eta_k, shapes (n, K+1) and (n, K)."""
    if path.eta is None:
        raise ValueError("estimate eta before applying the time change")
    d_eta = np.diff(path.eta, axis=1)
    if spec.r.is_constant:
        r = np.full(d_eta.shape, spec.r.constant)
    else:
        r = spec.r(surface.project(path.base_states[:, :-1]))
    delays = r * d_eta
    clock = np.empty_like(path.eta)
    clock[:, 0] = path.base_times[0]
    clock[:, 1:] = path.base_times[1:] + np.cumsum(delays, axis=1)
    return clock, delays


def _hold_points(path: PathBundle, surface: Surface) -> np.ndarray:
    sd = surface.unsigned_distance(path.base_states)
    left_nearer = sd[:, :-1] <= sd[:, 1:]
    nearest = np.where(left_nearer[..., None], path.base_states[:, :-1], path.base_states[:, 1:])
    return surface.project(nearest)


def apply_time_change(
    path: PathBundle,
    spec: DiffusionSpec,
    surface: Surface,
    eps: Optional[float] = None,
    horizon: Optional[float] = None,
) -> PathBundle:
    """
    Fill the changed layer of `path` on the physical grid with the base step.

    `eps` is the band used for occupation_S (defaults to the band eta was
    estimated with); `horizon` is the last physical time requested (defaults
    to the base horizon). Paths whose clock A ends before the horizon are
    flagged truncated.
    """
    eps = path.eps if eps is None else eps
    if eps is None:
        raise ValueError("no band width given for the occupation time")
    clock, delays = operational_clock(path, spec, surface)
    s = path.base_times
    ds = np.diff(s)
    dt = float(ds[0])
    t_last = s[-1] if horizon is None else float(horizon)
    n_out = int(round(t_last / dt))
    times = dt * np.arange(n_out + 1)
    n, k1, d = path.base_states.shape

    hold = _hold_points(path, surface) if np.any(delays > 0) else None
    zeta = np.empty((n, len(times)))
    gamma = np.empty((n, len(times)))
    states = np.empty((n, len(times), d))
    held = np.zeros((n, len(times)), dtype=bool)
    truncated = clock[:, -1] < t_last * (1.0 - 1e-12)

    for i in range(n):
        a = clock[i]
        k = np.clip(np.searchsorted(a, times, side="left"), 0, k1 - 1)
        at_start = k == 0
        km1 = np.maximum(k - 1, 0)
        into = times - a[km1]
        delay = delays[i, km1]
        in_hold = ~at_start & (into <= delay) & (delay > 0)
        run = np.clip(into - delay, 0.0, ds[km1])
        diffusing = np.where(run >= ds[km1], s[k], s[km1] + run)
        zeta[i] = np.where(at_start, s[0], np.where(in_hold, s[km1], diffusing))
        eta_i = path.eta[i]
        safe_delay = np.where(delay > 0, delay, 1.0)
        gamma_hold = eta_i[km1] + (eta_i[k] - eta_i[km1]) * into / safe_delay
        gamma[i] = np.where(at_start, 0.0, np.where(in_hold, gamma_hold, eta_i[k]))
        states[i] = path.base_states[i, k]
        if hold is not None and np.any(in_hold):
            states[i, in_hold] = hold[i, km1[in_hold]]
        held[i] = in_hold

    # Beyond the end of a truncated clock the path is left at its last state.
    gamma = np.maximum.accumulate(gamma, axis=1)
    band = surface.unsigned_distance(states) < eps
    occupation = np.zeros_like(gamma)
    np.cumsum(dt * (band[:, :-1] | held[:, :-1]), axis=1, out=occupation[:, 1:])

    path.clock = clock
    path.times = times
    path.zeta = zeta
    path.states = states
    path.gamma = gamma
    path.held = held
    path.occupation = occupation
    path.truncated = truncated
    if np.any(truncated):
        logger.warning(f"{int(truncated.sum())} path(s) exhausted their clock before t={t_last:g}")
    return path


def gamma_integral(path: PathBundle, spec: DiffusionSpec, surface: Surface) -> np.ndarray:
    """int_0^t r(x(u)) d gamma(u) on the physical grid, left-endpoint sums."""
    d_gamma = np.diff(path.gamma, axis=1)
    if spec.r.is_constant:
        r = np.full(d_gamma.shape, spec.r.constant)
    else:
        r = spec.r(surface.project(path.states[:, :-1]))
    out = np.zeros_like(path.gamma)
    np.cumsum(r * d_gamma, axis=1, out=out[:, 1:])
    return out


def extract_boundary_process(path: PathBundle, surface: Surface, thetas) -> BoundaryPath:
    """
    tau(theta) = sup{t : gamma(t) <= theta} on the physical grid (rightmost
    grid time on ties) and y(theta) = project(x(tau)). Levels at or beyond
    gamma(T_end) are the cemetery.
    """
    if path.gamma is None:
        raise ValueError("apply the time change before extracting the boundary process")
    start = path.base_states[:, 0]
    if np.any(surface.unsigned_distance(start) > ON_TOLERANCE * (1.0 + np.linalg.norm(start, axis=-1))):
        raise SurfaceError("the boundary process is defined for starts on S")
    thetas = np.asarray(thetas, dtype=float)
    n = path.n_paths
    tau = np.empty((n, len(thetas)))
    y = np.empty((n, len(thetas), path.dim))
    exhausted = path.gamma[:, -1].copy()
    for i in range(n):
        g = path.gamma[i]
        idx = np.searchsorted(g, thetas, side="right") - 1
        idx = np.clip(idx, 0, len(g) - 1)
        tau[i] = path.times[idx]
        y[i] = surface.project(path.states[i, idx])
    dead = thetas[None, :] >= exhausted[:, None]
    zero = thetas == 0.0
    tau[:, zero] = 0.0
    y[:, zero] = start[:, None, :]
    dead &= ~zero[None, :]
    tau[dead] = np.inf
    y[dead] = np.nan
    return BoundaryPath(path_ids=path.path_ids, thetas=thetas, tau=tau, y=y, exhausted_at=exhausted)
