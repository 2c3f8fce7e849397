"""
potential: V~, G0 and G_lambda by the single-layer representation.
"""

import logging
from dataclasses import asdict
from typing import Optional

import numpy as np

from membrane.model.surface import SurfaceKind
from membrane.potential.killing import check_lambda_monotone, line_targets, solve_G_lambda
from membrane.potential.representation import (
    check_average_identity,
    check_flux_condition,
    refinement_diagnostic,
    skew_density_1d,
    solve_G0,
    solve_Vtilde,
)
from membrane.verify.reports import CheckResult, verdict_of

logger = logging.getLogger(__name__)

NAME = "potential"
HELP = "Tabulate V~, G0 and G_lambda and check their defining identities."

MASS_BUDGET = 5e-4
CLOSED_FORM_BUDGET = 1e-2
SAVED_TIMES = 10
# time-grid refinements compared by the V~ quadrature diagnostic
REFINEMENT_FACTORS = (1, 2, 4)


def targets_for(ctx, n: int = 800) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Off-surface targets; on the line also their quadrature widths."""
    surface, t_end = ctx.surface, ctx.scheme.t_end
    sigma = np.sqrt(ctx.spec.isotropic_variance())
    if surface.kind is SurfaceKind.POINT:
        half_width = abs(float(ctx.start[0]) - surface.offset) + 10.0 * sigma * np.sqrt(t_end)
        return line_targets(half_width, n=n, membrane=surface.offset)
    # a ray through the sphere, clear of the fringe band
    gap = 2.0 * ctx.config.grids.fringe
    s = np.linspace(0.1 * surface.radius, 3.0 * surface.radius, 64)
    s = s[np.abs(s - surface.radius) > gap]
    direction = np.zeros(surface.dim)
    direction[0] = 1.0
    return np.asarray(surface.center) + s[:, None] * direction, None


def run(ctx) -> None:
    spec, surface, config = ctx.spec, ctx.surface, ctx.config
    grid = config.build_potential_grid()
    every = max(1, grid.n_steps // SAVED_TIMES)
    targets, weights = targets_for(ctx)

    vtilde = solve_Vtilde(spec, surface, grid)
    vtilde.write_csv(ctx.path("vtilde.csv"), every=every)
    refinement = refinement_diagnostic(spec, surface, grid, factors=REFINEMENT_FACTORS)
    ctx.record(CheckResult("vtilde-refinement", verdict_of(refinement["converging"]), refinement))
    on_nodes = solve_G0(spec, surface, grid, targets, vtilde=vtilde)
    average = check_average_identity(vtilde, on_nodes)
    ctx.record(CheckResult("average-identity", verdict_of(average.passed), asdict(average)))
    flux = check_flux_condition(spec, surface, grid, targets)
    ctx.record(CheckResult("flux-condition", verdict_of(flux.passed), asdict(flux)))

    g0 = solve_G0(spec, surface, grid, targets, sources=ctx.start[None, :], one_sided=False)
    g0.write_csv(ctx.path("G0.csv"), every=every)
    t_end = float(g0.times[-1])
    if weights is not None:
        mass = float(g0.at(t_end, 0) @ weights)
        ctx.record(
            CheckResult("G0-mass", verdict_of(abs(mass - 1.0) <= MASS_BUDGET), {"mass": mass, "budget": MASS_BUDGET, "t": t_end})
        )
        if spec.q.is_constant:
            exact = skew_density_1d(
                t_end, ctx.start[0], targets[:, 0], spec.q.constant, spec.isotropic_variance(), surface.offset
            )
            error = float(np.max(np.abs(g0.at(t_end, 0) - exact)) / np.max(np.abs(exact)))
            ctx.record(
                CheckResult(
                    "G0-closed-form",
                    verdict_of(error <= CLOSED_FORM_BUDGET),
                    {"relative_sup_error": error, "budget": CLOSED_FORM_BUDGET, "t": t_end},
                )
            )

    solutions = []
    for lam in config.battery.lambdas:
        solution = solve_G_lambda(lam, spec, surface, grid, targets, sources=ctx.start[None, :])
        solution.table.write_csv(ctx.path(f"G_lambda_{lam:g}.csv"), every=every)
        ctx.record(
            CheckResult(
                f"inequality-lambda-{lam:g}",
                verdict_of(solution.inequality.passed),
                {**asdict(solution.inequality), "route_discrepancy": solution.discrepancy},
            )
        )
        solutions.append(solution)
    ctx.cache["g_lambda"] = (solutions, targets, weights)
    if len(solutions) > 1:
        monotone = check_lambda_monotone(solutions)
        ctx.record(CheckResult("lambda-monotone", verdict_of(monotone["passed"]), monotone))
