"""
Cross-route agreement of u(t, x) = E_x phi(x(t)): the Monte Carlo ensemble,
the interface heat solver and, for r = 0 on the line, the representation
quadrature of G0. Also two-ensemble comparisons of the law of x(t) between
the skew schemes and against free paths.
"""

import logging
from itertools import combinations
from typing import Callable, Optional, Sequence, Union

import numpy as np

from membrane.errors import SchemeError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface, SurfaceKind
from membrane.model.test_functions import TestFunction
from membrane.pde.grid import Grid1D
from membrane.pde.solver import solve_interface_heat
from membrane.potential.killing import line_targets
from membrane.potential.representation import solve_G0
from membrane.potential.tables import PotentialGrid
from membrane.simulate.density import mean_estimate, two_sample_ks
from membrane.simulate.ensemble import Ensemble, run_ensemble
from membrane.simulate.rng import sibling_seed
from membrane.simulate.scheme import SimScheme, SkewMode
from membrane.verify.reports import HEADER, CheckResult, Verdict, verdict_of
from membrane.verify.stats import ks_test

logger = logging.getLogger(__name__)

InitialData = Union[TestFunction, Callable[[np.ndarray], np.ndarray]]

GRID_BUDGET = 5e-3
MC_SE_FACTOR = 3.0
# Sup-CDF budget between two ensembles, widened to the two-sample KS 1% quantile
SCHEME_BUDGET = 0.015
KS_QUANTILE_99 = 1.628


def _phi_values(phi: InitialData, x: np.ndarray) -> np.ndarray:
    if isinstance(phi, TestFunction):
        return np.asarray(phi.value(0.0, x), dtype=float)
    return np.asarray(phi(x), dtype=float).reshape(x.shape[:-1])


def potential_route_applies(spec: DiffusionSpec, surface: Surface) -> bool:
    """G0 is the exact law only for r = 0; the quadrature runs on the line."""
    return (
        surface.kind is SurfaceKind.POINT
        and spec.is_constant
        and spec.r.is_constant
        and spec.r.constant == 0.0
    )


def _potential_values(
    spec: DiffusionSpec,
    surface: Surface,
    phi: InitialData,
    start: np.ndarray,
    times: Sequence[float],
    grid: PotentialGrid,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sigma = np.sqrt(spec.isotropic_variance())
    half_width = abs(float(start[0]) - surface.offset) + 10.0 * sigma * np.sqrt(max(times))
    targets, weights = line_targets(half_width, n=1600, membrane=surface.offset)
    table = solve_G0(spec, surface, grid, targets, sources=start[None, :], one_sided=False)
    weighted = _phi_values(phi, targets) * weights
    values = np.array([float(table.at(t, 0) @ weighted) for t in times])
    return values, targets[:, 0] + 0.5 * weights, np.array([table.at(t, 0) * weights for t in times])


def check_uniqueness_consistency(
    spec: DiffusionSpec,
    surface: Surface,
    phi: InitialData,
    start,
    times: Sequence[float],
    scheme: SimScheme,
    n_paths: int,
    pde_grid: Grid1D,
    potential_grid: Optional[PotentialGrid] = None,
    ensemble: Optional[Ensemble] = None,
    grid_budget: float = GRID_BUDGET,
    workers: int = 1,
) -> CheckResult:
    """
    Pairwise discrepancies of the routes at each t against the combined
    budget: 3 Monte Carlo SE plus the grid budget per grid-based route.
    """
    start = np.atleast_1d(np.asarray(start, dtype=float))
    times = [float(t) for t in times]
    if ensemble is None:
        ensemble = run_ensemble(spec, surface, start, scheme, n_paths, workers=workers)

    routes: dict[str, np.ndarray] = {}
    mc = [mean_estimate(_phi_values(phi, ensemble.states_at(t))) for t in times]
    routes["monte-carlo"] = np.array([m.mean for m in mc])
    stderr = np.array([m.stderr for m in mc])

    heat = solve_interface_heat(spec, surface, phi, pde_grid)
    routes["pde"] = np.array([float(heat.at_points(t, start[None, :])[0]) for t in times])

    ks = None
    if potential_route_applies(spec, surface):
        grid = potential_grid or PotentialGrid(t_end=max(times), n_steps=200)
        values, edges, masses = _potential_values(spec, surface, phi, start, times, grid)
        routes["potential"] = values
        cdf_points = np.cumsum(masses[-1])
        samples = ensemble.states_at(times[-1])[:, 0]
        ks = ks_test(samples, lambda y: np.interp(y, edges, cdf_points, left=0.0, right=1.0))
    else:
        logger.info("Potential route not applicable (needs r = 0, constant b, the line)")

    rows = []
    passed = True
    for a, b in combinations(routes, 2):
        budget = grid_budget * ((a != "monte-carlo") + (b != "monte-carlo"))
        if "monte-carlo" in (a, b):
            budget = budget + MC_SE_FACTOR * stderr
        gap = np.abs(routes[a] - routes[b])
        ok = bool(np.all(gap <= budget))
        passed &= ok
        rows.append({"routes": [a, b], "discrepancy": gap, "budget": np.broadcast_to(budget, gap.shape), "passed": ok})
        level = logging.INFO if ok else logging.WARNING
        logger.log(level, f"Routes {a} vs {b}: max gap {np.max(gap):.3e}")

    stats = {
        "times": times,
        "start": start,
        "values": routes,
        "mc_stderr": stderr,
        "pairs": rows,
        "n_paths": int(ensemble.valid.sum()),
    }
    if ks is not None:
        stats["ks_statistic"], stats["ks_pvalue"] = ks
    return CheckResult("uniqueness-consistency", verdict_of(passed), stats, header=HEADER)


def _compare_laws(name: str, surface: Surface, t: float, first: Ensemble, second: Ensemble, budget: float) -> CheckResult:
    """Two-sample KS on the signed distance to S at time t."""
    a = surface.signed_distance(first.states_at(t))
    b = surface.signed_distance(second.states_at(t))
    n, m = a.size, b.size
    threshold = max(budget, KS_QUANTILE_99 * np.sqrt((n + m) / (n * m)))
    statistic, pvalue = two_sample_ks(a, b)
    passed = statistic <= threshold
    level = logging.INFO if passed else logging.WARNING
    logger.log(level, f"{name}: two-sample KS {statistic:.4f} against {threshold:.4f} at t={t:g}")
    stats = {
        "t": t,
        "ks_statistic": statistic,
        "ks_pvalue": pvalue,
        "budget": threshold,
        "n_paths": [n, m],
        "modes": [first.scheme.skew_mode.value, second.scheme.skew_mode.value],
        "seeds": [first.scheme.seed, second.scheme.seed],
    }
    return CheckResult(name, verdict_of(passed), stats)


def check_scheme_agreement(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    n_paths: int,
    t: Optional[float] = None,
    eps_drift: Optional[float] = None,
    budget: float = SCHEME_BUDGET,
    ensemble: Optional[Ensemble] = None,
    workers: int = 1,
) -> CheckResult:
    """
    The crossing-resample and mollified-drift schemes against each other at
    time t, each on its own random streams. A crossing-resample `ensemble`
    is reused. INCONCLUSIVE when the skew is too strong for the drift.
    """
    start = np.atleast_1d(np.asarray(start, dtype=float))
    t = scheme.t_end if t is None else float(t)
    if ensemble is None or ensemble.scheme.skew_mode is not SkewMode.CROSSING_RESAMPLE:
        crossing = scheme.with_(skew_mode=SkewMode.CROSSING_RESAMPLE)
        ensemble = run_ensemble(spec, surface, start, crossing, n_paths, workers=workers)
    mollified = scheme.with_(
        skew_mode=SkewMode.MOLLIFIED_DRIFT,
        eps_drift=eps_drift or scheme.eps_drift,
        seed=sibling_seed(scheme.seed),
    )
    try:
        drifted = run_ensemble(spec, surface, start, mollified, n_paths, workers=workers)
    except SchemeError as e:
        logger.info(f"Scheme agreement skipped: {e}")
        return CheckResult("scheme-agreement", Verdict.INCONCLUSIVE, {"reason": str(e)})
    return _compare_laws("scheme-agreement", surface, t, ensemble, drifted, budget)


def neutral_membrane(spec: DiffusionSpec) -> bool:
    """q = 0 and r = 0 everywhere on S."""
    return all(f.is_constant and f.constant == 0.0 for f in (spec.q, spec.r))


def check_skew_neutrality(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    n_paths: int,
    t: Optional[float] = None,
    budget: float = SCHEME_BUDGET,
    ensemble: Optional[Ensemble] = None,
    workers: int = 1,
) -> CheckResult:
    """
    With q = 0 and r = 0 the membrane must be invisible: the crossing-resample
    ensemble against plain Euler paths (the mollified drift with q = 0 adds
    nothing) on independent streams. Any surface and any b.
    """
    if not neutral_membrane(spec):
        return CheckResult("skew-neutrality", Verdict.INCONCLUSIVE, {"reason": "needs q = 0 and r = 0"})
    start = np.atleast_1d(np.asarray(start, dtype=float))
    t = scheme.t_end if t is None else float(t)
    if ensemble is None or ensemble.scheme.skew_mode is not SkewMode.CROSSING_RESAMPLE:
        crossing = scheme.with_(skew_mode=SkewMode.CROSSING_RESAMPLE)
        ensemble = run_ensemble(spec, surface, start, crossing, n_paths, workers=workers)
    euler = scheme.with_(skew_mode=SkewMode.MOLLIFIED_DRIFT, seed=sibling_seed(scheme.seed, tag=2))
    free = run_ensemble(spec, surface, start, euler, n_paths, workers=workers)
    return _compare_laws("skew-neutrality", surface, t, ensemble, free, budget)
