"""
Martingale and submartingale checks on simulated ensembles.

For a test function f the compensated process is

    M_f(t) = f(t, x(t)) - int_0^t 1_D(x(u)) (df/du + 1/2 b : D^2 f)(u, x(u)) du
                        - int_0^t (r df/du + Kf)(u, x(u)) d gamma(u),

with 1_D the complement of the eps-band (and of the holds on S), and
left-endpoint sums against the monotone gamma grid. The boundary check uses
the theta clock of the boundary process instead.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from membrane.errors import SchemeError, SurfaceError, TestFunctionError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.model.test_functions import TestFunction
from membrane.pde.operators import SurfaceTable
from membrane.simulate.ensemble import Ensemble
from membrane.simulate.paths import PathBundle
from membrane.simulate.timechange import extract_boundary_process
from membrane.verify.reports import MartingaleReport, Verdict, verdict_of
from membrane.verify.stats import ONE_SIDED_SE, critical_value, increment_stats

logger = logging.getLogger(__name__)

MAX_TRUNCATION = 0.2
SURFACE_INEQUALITY_TOL = 1e-10


def compensated_process(
    f: TestFunction,
    bundle: PathBundle,
    spec: DiffusionSpec,
    surface: Surface,
    eps: Optional[float] = None,
    surface_term: bool = True,
) -> np.ndarray:
    """M_f on the physical grid, (n, M+1). Without `surface_term` this is the submartingale X_f."""
    if bundle.gamma is None:
        raise SchemeError("the ensemble has no time change; simulate with time_change=True")
    eps = bundle.eps if eps is None else eps
    times, x = bundle.times, bundle.states
    tt = np.broadcast_to(times, x.shape[:-1])
    values = np.asarray(f.value(tt, x), dtype=float)
    dt = np.diff(times)

    in_d = (surface.unsigned_distance(x[:, :-1]) >= eps) & ~bundle.held[:, :-1]
    bulk = np.zeros(in_d.shape)
    if np.any(in_d):
        bulk[in_d] = f.generator(tt[:, :-1][in_d], x[:, :-1][in_d], spec)
    increments = bulk * dt

    if surface_term:
        d_gamma = np.diff(bundle.gamma, axis=1)
        moving = d_gamma > 0
        if np.any(moving):
            on_s = surface.project(x[:, :-1][moving])
            t_s = tt[:, :-1][moving]
            local = spec.r(on_s) * f.dt(t_s, on_s) + f.Kf(t_s, on_s, spec, surface)
            increments[moving] += local * d_gamma[moving]

    compensator = np.zeros_like(values)
    np.cumsum(increments, axis=1, out=compensator[:, 1:])
    return values - compensator


def _checkpoint_indices(times: np.ndarray, checkpoints: Sequence[float]) -> np.ndarray:
    idx = [0] + [int(np.argmin(np.abs(times - t))) for t in checkpoints]
    return np.unique(idx)


def _usable(ensemble: Ensemble) -> tuple[np.ndarray, float]:
    """Valid, untruncated paths and the truncated fraction among the valid ones."""
    valid = ensemble.valid
    truncated = ensemble.concat("truncated")
    fraction = float(truncated[valid].mean()) if valid.any() else 1.0
    return valid & ~truncated, fraction


def _require_f(f: TestFunction) -> None:
    if not f.has_Kf:
        raise TestFunctionError(f"{f.name} has no one-sided conormal derivatives; K f is undefined")


def check_martingale(
    f: TestFunction,
    ensemble: Ensemble,
    checkpoints: Sequence[float],
    eps: Optional[float] = None,
    family_size: int = 1,
) -> MartingaleReport:
    """
    z-test of E[M_f(t_{k+1}) - M_f(t_k)] = 0 at every checkpoint, Bonferroni
    over the checkpoints times `family_size` functions.
    """
    _require_f(f)
    spec, surface = ensemble.spec, ensemble.surface
    process = ensemble.map(lambda b: compensated_process(f, b, spec, surface, eps))
    usable, truncated = _usable(ensemble)
    indices = _checkpoint_indices(ensemble.times, checkpoints)
    inc = increment_stats(process[usable], indices)
    crit = critical_value((len(indices) - 1) * family_size)
    z = inc.z
    passed = bool(np.all(np.abs(z) <= crit))
    report = MartingaleReport(
        function=f.name,
        checkpoints=[float(ensemble.times[k]) for k in indices[1:]],
        mean_increments=inc.means,
        stderrs=inc.stderrs,
        z_scores=z,
        critical_value=crit,
        n_paths=inc.n,
        verdict=verdict_of(passed),
        truncated_fraction=truncated,
        meta={"eps": eps if eps is not None else ensemble.scheme.eps, "family_size": family_size},
    )
    logger.info(f"Martingale check {f.name}: max |z| {np.max(np.abs(z)):.2f} vs {crit:.2f} -> {report.verdict.value}")
    return report


def _surface_sample(surface: Surface, n: int = 16) -> np.ndarray:
    try:
        return surface.quadrature().points
    except SurfaceError:
        rng = np.random.default_rng(0)
        return surface.project(2.0 * rng.standard_normal((n, surface.dim)))


def surface_inequality(f: TestFunction, spec: DiffusionSpec, surface: Surface, t_end: float, n_times: int = 17) -> float:
    """min of r df/dt + K f over a surface sample and a time grid on [0, t_end]."""
    points = _surface_sample(surface)
    times = np.linspace(0.0, t_end, n_times)
    tt = np.repeat(times[:, None], len(points), axis=1)
    xx = np.broadcast_to(points, (n_times, *points.shape))
    return float(np.min(f.surface_operator(tt, xx, spec, surface)))


def check_submartingale(
    f: TestFunction,
    ensemble: Ensemble,
    checkpoints: Sequence[float],
    eps: Optional[float] = None,
) -> MartingaleReport:
    """
    One-sided check that X_f(t) = f(t, x(t)) - int 1_D (df/du + L f) du has
    mean increments >= -3 SE. f must satisfy r df/dt + K f >= 0 on S.
    """
    _require_f(f)
    spec, surface = ensemble.spec, ensemble.surface
    lowest = surface_inequality(f, spec, surface, ensemble.scheme.t_end)
    if lowest < -SURFACE_INEQUALITY_TOL:
        raise TestFunctionError(f"{f.name}: r df/dt + K f reaches {lowest:.3e} < 0 on S")
    process = ensemble.map(lambda b: compensated_process(f, b, spec, surface, eps, surface_term=False))
    usable, truncated = _usable(ensemble)
    indices = _checkpoint_indices(ensemble.times, checkpoints)
    inc = increment_stats(process[usable], indices)
    passed = bool(np.all(inc.means >= -ONE_SIDED_SE * inc.stderrs))
    report = MartingaleReport(
        function=f.name,
        checkpoints=[float(ensemble.times[k]) for k in indices[1:]],
        mean_increments=inc.means,
        stderrs=inc.stderrs,
        z_scores=inc.z,
        critical_value=-ONE_SIDED_SE,
        n_paths=inc.n,
        verdict=verdict_of(passed),
        kind="submartingale",
        truncated_fraction=truncated,
        meta={"surface_min": lowest},
    )
    logger.info(f"Submartingale check {f.name}: min z {np.min(inc.z):.2f} -> {report.verdict.value}")
    return report


def _label(h) -> str:
    if hasattr(h, "name"):
        return str(h.name)
    if hasattr(h, "describe"):
        return h.describe()
    return getattr(h, "__name__", "h")


def check_boundary_martingale(
    h: Callable[[np.ndarray], np.ndarray],
    ensemble: Ensemble,
    ktilde: SurfaceTable,
    thetas: np.ndarray,
    checkpoints: Optional[Sequence[float]] = None,
    max_truncation: float = MAX_TRUNCATION,
) -> MartingaleReport:
    """
    Mean-increment test of h(tau(theta), y(theta)) - int_0^theta (K~h)(tau(u), y(u)) du
    in the theta clock, for boundary data h(t) constant over S. Paths whose
    gamma runs out before the last theta are dropped; more than
    `max_truncation` of them makes the verdict INCONCLUSIVE.
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas[0] != 0.0:
        thetas = np.concatenate([[0.0], thetas])
    surface = ensemble.surface
    processes, alive, start_exact = [], [], True
    d_theta = np.diff(thetas)
    for bundle in ensemble.bundles:
        bp = extract_boundary_process(bundle, surface, thetas)
        live = bp.exhausted_at > thetas[-1]
        tau = np.where(np.isfinite(bp.tau), bp.tau, 0.0)
        value = np.asarray(h(tau), dtype=float)
        rate = np.asarray(ktilde.at(tau), dtype=float)
        integral = np.zeros_like(value)
        np.cumsum(rate[:, :-1] * d_theta, axis=1, out=integral[:, 1:])
        processes.append(value - integral)
        alive.append(live & bundle.valid)
        start_exact &= bool(np.all(bp.tau[:, 0] == 0.0))
    process = np.concatenate(processes)
    alive = np.concatenate(alive)
    valid = ensemble.valid
    truncated = float(1.0 - alive[valid].mean()) if valid.any() else 1.0

    if checkpoints is None:
        checkpoints = thetas[np.linspace(0, len(thetas) - 1, 5).astype(int)[1:]]
    indices = _checkpoint_indices(thetas, checkpoints)
    inc = increment_stats(process[alive], indices)
    crit = critical_value(len(indices) - 1)
    passed = bool(np.all(np.abs(inc.z) <= crit)) and start_exact
    if truncated > max_truncation:
        verdict = Verdict.INCONCLUSIVE
        logger.warning(f"Boundary martingale: {truncated:.1%} of paths exhausted gamma before theta={thetas[-1]:g}")
    else:
        verdict = verdict_of(passed)
    report = MartingaleReport(
        function=_label(h),
        checkpoints=[float(thetas[k]) for k in indices[1:]],
        mean_increments=inc.means,
        stderrs=inc.stderrs,
        z_scores=inc.z,
        critical_value=crit,
        n_paths=inc.n,
        verdict=verdict,
        kind="boundary-martingale",
        truncated_fraction=truncated,
        meta={"start_exact": start_exact, "theta_max": float(thetas[-1])},
    )
    logger.info(f"Boundary martingale check: {report.verdict.value} ({inc.n} live paths)")
    return report
