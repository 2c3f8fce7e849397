"""
pde: u(t, x) = E_x phi(x(t)) from the interface heat solver.
"""

import logging

import numpy as np
from scipy import stats

from cli.commands.common import build_phi, null_membrane
from membrane.pde.operators import maximum_principle_audit
from membrane.pde.solver import MembraneRow, solve_interface_heat
from membrane.verify.reports import CheckResult, verdict_of

logger = logging.getLogger(__name__)

NAME = "pde"
HELP = "Solve the interface heat problem for the run's initial data."

ORACLE_BUDGET = 1e-3
SAVED_TIMES = 20


def gaussian_oracle(config, sigma2: float, t: float, x: np.ndarray) -> np.ndarray:
    """E_x phi(x(t)) without a membrane, for the step and bump initial data."""
    width = config.battery.phi_width
    if config.battery.phi == "step":
        return stats.norm.cdf(x / np.sqrt(sigma2 * t + width**2))
    width = width or 1.0
    spread = width**2 + sigma2 * t
    return width / np.sqrt(spread) * np.exp(-0.5 * x**2 / spread)


def run(ctx) -> None:
    config = ctx.config
    grid = config.build_pde_grid()
    phi = build_phi(config)
    row = MembraneRow(config.grids.membrane_row)
    solution = solve_interface_heat(ctx.spec, ctx.surface, phi, grid, membrane_row=row)
    every = max(1, (len(solution.times) - 1) // SAVED_TIMES)
    solution.write_csv(ctx.path("u.csv"), every=every)

    t_end = float(solution.times[-1])
    value = float(solution.at_points(t_end, ctx.start[None, :])[0])
    ctx.write_json(
        "summary.json",
        {"grid": grid.describe(), "membrane_row": row.value, "t": t_end, "start": ctx.start, "value": value},
    )
    logger.info(f"u({t_end:g}, {ctx.start.tolist()}) = {value:.6g}")

    if row is MembraneRow.FINITE_VOLUME:
        audit = maximum_principle_audit(solution)
        ctx.record(CheckResult("maximum-principle", verdict_of(audit.passed), audit.to_dict()))

    sigma2 = null_membrane(ctx)
    if sigma2 is not None:
        # compare away from the truncation boundary
        inner = np.abs(grid.nodes) <= 0.5 * grid.x_max
        exact = gaussian_oracle(config, sigma2, t_end, grid.nodes[inner])
        error = float(np.max(np.abs(solution.values[-1][inner] - exact)))
        ctx.record(
            CheckResult(
                "gaussian-oracle",
                verdict_of(error <= ORACLE_BUDGET),
                {"max_node_error": error, "budget": ORACLE_BUDGET, "t": t_end},
            )
        )
