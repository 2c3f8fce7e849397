"""
resolvent: V_lambda solving lambda f - K~f = psi on S, with its residual report.
"""

import logging
from dataclasses import asdict

from membrane.model.test_functions import TimeBump
from membrane.potential.resolvent import (
    ResolventProblem,
    check_resolvent,
    resolvent_refinement,
    single_layer_jump,
    solve_V_lambda,
    uniqueness_probe,
)
from membrane.verify.reports import CheckResult, verdict_of

logger = logging.getLogger(__name__)

NAME = "resolvent"
HELP = "Solve the resolvent equation on S for a time-bump psi and report its residual."

# Halving the time step must shrink the residual at least this much
REFINEMENT_RATIO = 1.8


class BumpData:
    """psi(t, y) = bump(t), constant over S."""

    def __init__(self, bump: TimeBump) -> None:
        self.bump = bump
        self.time_support = bump.support
        self.name = f"psi={bump.describe()}"

    def __call__(self, t, points):
        return self.bump(t)


def run(ctx) -> None:
    config = ctx.config
    battery = config.battery
    psi = BumpData(TimeBump(*battery.bump))
    grid = config.build_potential_grid(t_end=battery.bump[1])

    for lam in battery.lambdas:
        label = f"lambda-{lam:g}"
        problem = ResolventProblem(lam, psi, ctx.spec, ctx.surface)
        solution = solve_V_lambda(problem, grid)
        solution.surface_table().write_csv(ctx.path(f"V_{label}.csv"))

        report = check_resolvent(solution, tolerance=battery.resolvent_tolerance)
        ctx.write_json(f"residual_{label}.json", {**report.to_dict(), "problem": problem.describe(), "grid": grid.describe()})
        ctx.record(CheckResult(f"resolvent-residual-{label}", verdict_of(report.passed), report.to_dict()))

        refinement = resolvent_refinement(problem, grid)
        finest = refinement["residuals"][-1]
        converging = refinement["ratios"][-1] >= REFINEMENT_RATIO or finest <= 1e-3 * battery.resolvent_tolerance
        ctx.record(CheckResult(f"resolvent-refinement-{label}", verdict_of(converging), refinement))

        probe = uniqueness_probe(problem, grid, seed=config.seed)
        probe.pop("permutation")
        ctx.record(CheckResult(f"uniqueness-probe-{label}", verdict_of(probe["passed"]), probe))

        # the march density lives on the same time grid and nodes
        jump = single_layer_jump(ctx.spec, ctx.surface, grid, lambda t, x: solution.density)
        ctx.record(CheckResult(f"single-layer-jump-{label}", verdict_of(jump.passed), asdict(jump)))
        logger.info(f"Resolvent {label}: sup residual {report.sup_residual:.3e}")
