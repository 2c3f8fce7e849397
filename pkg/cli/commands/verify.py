"""
verify: the martingale battery, the time-change identities and the boundary process.
"""

import logging

import numpy as np

from cli.commands.common import checkpoints, on_surface
from membrane.model.surface import SurfaceKind
from membrane.model.test_functions import CappedDistance, TimeBump
from membrane.pde.operators import evaluate_Ktilde
from membrane.simulate.dumps import write_boundary_csv
from membrane.simulate.timechange import extract_boundary_process
from membrane.verify.identities import check_leaves_surface, check_occupation_identity, check_rate_scaling
from membrane.verify.martingale import check_boundary_martingale, check_submartingale
from membrane.verify.suite import calibrate, default_battery, martingale_suite

logger = logging.getLogger(__name__)

NAME = "verify"
HELP = "Run the martingale battery and the pathwise identities on the ensemble."

# Paths whose gamma(T) falls below the last theta are truncated; keep them to this quantile
BOUNDARY_QUANTILE = 0.1
BOUNDARY_THETAS = 41


def boundary_check(ctx, ensemble) -> None:
    if ctx.surface.kind is not SurfaceKind.POINT or not on_surface(ctx):
        logger.info("Boundary-process check needs a point membrane and a start on it")
        return
    battery = ctx.config.battery
    h = TimeBump(*battery.bump)
    theta_max = float(np.quantile(ensemble.gamma_at(ctx.scheme.t_end), BOUNDARY_QUANTILE))
    if theta_max <= 0.0:
        logger.info("Too few paths reach S for the boundary-process check")
        return
    grid = ctx.config.build_pde_grid(t_end=battery.bump[1])
    ktilde = evaluate_Ktilde(h, ctx.spec, ctx.surface, grid)
    ktilde.write_csv(ctx.path("ktilde.csv"))
    thetas = np.linspace(0.0, theta_max, BOUNDARY_THETAS)
    first = ensemble.bundles[0]
    write_boundary_csv(ctx.path("boundary.csv"), [extract_boundary_process(first.select(first.valid), ctx.surface, thetas)])
    ctx.record(check_boundary_martingale(h, ensemble, ktilde, thetas))


def run(ctx) -> None:
    ensemble = ctx.ensemble()
    spec, config = ctx.spec, ctx.config
    t_end = ctx.scheme.t_end
    points = checkpoints(ctx)

    battery = default_battery(ctx.surface, t_end, caps=config.battery.caps)
    for report in martingale_suite(ensemble, points, battery):
        ctx.record(report)
    ctx.record(check_submartingale(CappedDistance(ctx.surface, 1), ensemble, points))

    delayed = not (spec.r.is_constant and spec.r.constant == 0.0)
    if delayed:
        ctx.record(check_occupation_identity(ensemble, config.battery.eps_schedule, [t_end]))
        if spec.r.is_constant:
            ctx.record(check_rate_scaling(ensemble))
        if on_surface(ctx):
            ctx.record(check_leaves_surface(ensemble, t=min(0.1, t_end)))

    boundary_check(ctx, ensemble)

    if config.battery.calibration_seeds > 0:
        ctx.record(
            calibrate(
                spec,
                ctx.surface,
                ctx.start,
                ctx.scheme,
                config.scheme.n_paths,
                config.battery.calibration_seeds,
                points,
                workers=ctx.settings.workers,
            )
        )
