"""
Base layer: Euler-Maruyama for dx0 = b^{1/2} dw with the skew applied at S.

Crossing-resample mode: after a step whose increment changes the side of S,
or whose end point lands in the eps-band, the side is redrawn (exterior with
probability (1+q(z))/2 at the projected crossing point z) and the point is
moved along the normal keeping its distance to S.

Mollified-drift mode: the drift artanh(q(z)) N(z) rho(sd) is added, with rho a
biweight bump of unit mass on (-eps_drift, eps_drift). The small-eps limit of
that drift has skew tanh of its coefficient, hence the artanh.
"""

import logging
from typing import Optional

import numpy as np

from membrane.errors import SchemeError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.simulate.paths import PathBundle
from membrane.simulate.rng import Chunk, chunk_generator
from membrane.simulate.scheme import MOLLIFIED_MAX_SKEW, SimScheme, SkewMode

logger = logging.getLogger(__name__)


def biweight(u: np.ndarray, eps: float) -> np.ndarray:
    """Unit-mass bump (15/16 eps)(1 - (u/eps)^2)^2 on (-eps, eps)."""
    v = u / eps
    return np.where(np.abs(v) < 1.0, 15.0 / (16.0 * eps) * (1.0 - v**2) ** 2, 0.0)


def _increments(spec: DiffusionSpec, x: np.ndarray, noise: np.ndarray, root: Optional[np.ndarray]) -> np.ndarray:
    if root is not None:
        return noise @ root.T
    return np.einsum("nij,nj->ni", spec.sqrt_b(x), noise)


def _resample_sides(
    spec: DiffusionSpec,
    surface: Surface,
    x: np.ndarray,
    sd: np.ndarray,
    proposal: np.ndarray,
    sd_new: np.ndarray,
    scheme: SimScheme,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    crossed = (sd != 0.0) & (np.sign(sd) != np.sign(sd_new)) | (sd == 0.0)
    trigger = crossed | (np.abs(sd_new) < scheme.eps)
    # Starting on S counts as a crossing for the side draw but not for unfolding.
    crossed_flag = (sd != 0.0) & (np.sign(sd) * np.sign(sd_new) < 0)
    if scheme.bridge_crossing:
        z = surface.project(proposal)
        var_n = np.maximum(spec.normal_variance(z, surface), 1e-300)
        touch = np.exp(-2.0 * np.abs(sd) * np.abs(sd_new) / (var_n * scheme.dt))
        trigger |= rng.random(len(sd)) < touch
    if not np.any(trigger):
        return proposal, crossed_flag
    idx = np.flatnonzero(trigger)
    a = sd[idx]
    b = sd_new[idx]
    # Linear interpolation of the signed distance locates the crossing point.
    denom = np.where(crossed_flag[idx], a - b, 1.0)
    u = np.where(crossed_flag[idx], a / denom, 1.0)
    crossing = x[idx] + u[:, None] * (proposal[idx] - x[idx])
    z = surface.project(crossing)
    q = spec.q(z)
    exterior = rng.random(len(idx)) < 0.5 * (1.0 + q)
    target = np.where(exterior, 1.0, -1.0) * np.abs(b)
    out = proposal.copy()
    out[idx] = surface.reflect_to(proposal[idx], target)
    return out, crossed_flag


def _mollified_drift(spec: DiffusionSpec, surface: Surface, x: np.ndarray, sd: np.ndarray, eps: float) -> np.ndarray:
    near = np.abs(sd) < eps
    drift = np.zeros_like(x)
    if not np.any(near):
        return drift
    z = surface.project(x[near])
    _, big_n = spec.conormal(z, surface)
    coefficient = np.arctanh(spec.q(z))
    drift[near] = (coefficient * biweight(sd[near], eps))[:, None] * big_n
    return drift


def _check_mollified_skew(spec: DiffusionSpec, surface: Surface) -> None:
    if spec.q.is_constant:
        worst = abs(spec.q.constant)
    else:
        quad = surface.quadrature()
        worst = float(np.max(np.abs(spec.q(quad.points))))
    if worst > MOLLIFIED_MAX_SKEW:
        raise SchemeError(
            f"mollified-drift mode needs |q| <= {MOLLIFIED_MAX_SKEW}, got {worst:g}; "
            "use crossing-resample for total skew"
        )


def simulate_base(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    n_paths: int,
    chunk: Optional[Chunk] = None,
) -> PathBundle:
    """
    Simulate the base layer x0 for one chunk of paths on the grid s_k = k dt,
    k = 0..K with K dt = t_end.

    The chunk fixes the random stream; without one the whole batch is chunk 0.
    Paths that produce non-finite states are frozen at their last finite
    state and flagged in `diverged`.
    """
    if spec.dim != surface.dim:
        raise SchemeError(f"spec has dimension {spec.dim}, surface {surface.dim}")
    if scheme.skew_mode is SkewMode.MOLLIFIED_DRIFT:
        _check_mollified_skew(spec, surface)
    chunk = chunk or Chunk(index=0, start=0, stop=n_paths)
    n = chunk.size
    rng = chunk_generator(scheme.seed, chunk.index)

    k_steps = scheme.n_steps
    dt = scheme.dt
    base_times = dt * np.arange(k_steps + 1)
    x0 = np.broadcast_to(np.atleast_1d(np.asarray(start, dtype=float)), (n, spec.dim)).copy()
    states = np.empty((n, k_steps + 1, spec.dim))
    states[:, 0] = x0
    crossed = np.zeros((n, k_steps), dtype=bool)
    diverged = np.zeros(n, dtype=bool)
    root = spec.sqrt_b(x0[0]) if spec.is_constant else None
    sqrt_dt = np.sqrt(dt)

    x = x0
    sd = surface.signed_distance(x)
    for k in range(k_steps):
        noise = sqrt_dt * rng.standard_normal((n, spec.dim))
        proposal = x + _increments(spec, x, noise, root)
        if scheme.skew_mode is SkewMode.MOLLIFIED_DRIFT:
            proposal += dt * _mollified_drift(spec, surface, x, sd, scheme.eps_drift)
            sd_new = surface.signed_distance(proposal)
            step_crossed = (sd != 0.0) & (np.sign(sd) * np.sign(sd_new) < 0)
        else:
            sd_prop = surface.signed_distance(proposal)
            proposal, step_crossed = _resample_sides(spec, surface, x, sd, proposal, sd_prop, scheme, rng)
            sd_new = surface.signed_distance(proposal)

        bad = ~np.all(np.isfinite(proposal), axis=1)
        if np.any(bad & ~diverged):
            logger.warning(f"{int(np.sum(bad & ~diverged))} path(s) diverged at step {k + 1} in chunk {chunk.index}")
        diverged |= bad
        proposal[diverged] = x[diverged]
        sd_new = np.where(diverged, sd, sd_new)
        step_crossed &= ~diverged

        states[:, k + 1] = proposal
        crossed[:, k] = step_crossed
        x, sd = proposal, sd_new

    if np.mean(diverged) > scheme.max_diverged_fraction:
        raise SchemeError(
            f"{int(diverged.sum())} of {n} paths diverged in chunk {chunk.index}; reduce dt"
        )
    return PathBundle(
        path_ids=chunk.path_ids,
        base_times=base_times,
        base_states=states,
        crossed=crossed,
        diverged=diverged,
        meta={"chunk": chunk.index, "scheme": scheme.to_dict()},
    )
