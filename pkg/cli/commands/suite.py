"""
all: every stage that applies to the run, then the cross-route checks.
"""

import logging

from cli.commands import pde, potential, resolvent, simulate, verify
from cli.commands.common import build_phi, potential_supported
from membrane.model.surface import SurfaceKind
from membrane.model.test_functions import gaussian_bump
from membrane.potential.killing import laplace_functional
from membrane.simulate.ensemble import laplace_estimate
from membrane.verify.consistency import MC_SE_FACTOR, check_scheme_agreement, check_uniqueness_consistency
from membrane.verify.reports import CheckResult, verdict_of

logger = logging.getLogger(__name__)

NAME = "all"
HELP = "Run every applicable stage and the cross-route consistency suite."

LAPLACE_GRID_BUDGET = 1e-3


def laplace_identity(ctx) -> None:
    """int phi G_lambda dy against E[phi(x0(t)) exp(-lambda int r d eta)] for a bump phi."""
    solutions, _, weights = ctx.cache["g_lambda"]
    bump = gaussian_bump(ctx.surface.dim, center=ctx.start, width=0.5, name="laplace-bump")

    def phi(y):
        return bump.value(0.0, y)

    ensemble = ctx.ensemble()
    rows, passed = [], True
    for solution in solutions:
        for t in ctx.config.battery.times:
            mc = laplace_estimate(ensemble, phi, solution.lam, t)
            value = float(laplace_functional(solution, phi, t, weights)[0])
            budget = MC_SE_FACTOR * mc.stderr + LAPLACE_GRID_BUDGET
            ok = abs(value - mc.mean) <= budget
            passed &= ok
            rows.append({"lambda": solution.lam, "t": t, "potential": value, "monte_carlo": mc.mean, "stderr": mc.stderr, "passed": ok})
    ctx.write_rows(
        "laplace_identity.csv",
        ["lambda", "t", "potential", "monte_carlo", "stderr"],
        ([r["lambda"], r["t"], r["potential"], r["monte_carlo"], r["stderr"]] for r in rows),
    )
    ctx.record(CheckResult("laplace-identity", verdict_of(passed), {"rows": rows}))


def run(ctx) -> None:
    stages = [simulate]
    if ctx.surface.kind is not SurfaceKind.HYPERPLANE:
        stages.append(pde)
    if potential_supported(ctx):
        stages.extend([potential, resolvent])
    else:
        logger.info("Layer potentials need a point or sphere membrane with constant isotropic b; skipped")
    stages.append(verify)

    for stage in stages:
        logger.info(f"--- {stage.NAME} ---")
        stage.run(ctx)

    if "g_lambda" in ctx.cache and ctx.surface.kind is SurfaceKind.POINT:
        laplace_identity(ctx)

    if ctx.surface.kind is not SurfaceKind.HYPERPLANE:
        config = ctx.config
        times = config.battery.times
        result = check_uniqueness_consistency(
            ctx.spec,
            ctx.surface,
            build_phi(config),
            ctx.start,
            times,
            ctx.scheme,
            config.scheme.n_paths,
            config.build_pde_grid(t_end=max(times)),
            potential_grid=config.build_potential_grid(t_end=max(times)),
            ensemble=ctx.ensemble(),
            workers=ctx.settings.workers,
        )
        ctx.record(result)

    ctx.record(
        check_scheme_agreement(
            ctx.spec,
            ctx.surface,
            ctx.start,
            ctx.scheme,
            ctx.config.scheme.n_paths,
            ensemble=ctx.ensemble(),
            workers=ctx.settings.workers,
        )
    )
