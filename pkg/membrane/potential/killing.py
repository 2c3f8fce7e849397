"""
G_lambda: the density of x0(t) weighted by exp(-lambda * int r d eta).

Two independent routes are solved on the same grid:

* the source-side equation, G_lambda = G0 - lambda V~ * (r G_lambda), with the
  unknown carried by sources on the nodes;
* the target-side equation, G_lambda = G0 - lambda (r G_lambda) * G0, with the
  unknown carried by surface targets. On S that unknown is split as
  g0 + e~ so the piecewise-linear part stays bounded.

Neither route clamps anything; 0 <= G_lambda <= G0 is checked afterwards.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from membrane.errors import CoefficientError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.potential.kernels import SurfaceNodes
from membrane.potential.quadrature import (
    kernel_moments,
    lag_sum,
    linear_moments,
    pair_convolution,
    trapezoid_convolution,
)
from membrane.potential.representation import representation, solve_Vtilde
from membrane.potential.tables import KernelTable, PotentialGrid

logger = logging.getLogger(__name__)

INEQUALITY_RTOL = 1e-8


@dataclass
class InequalityReport:
    passed: bool
    min_value: float
    max_excess: float
    atol: float
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GLambdaSolution:
    lam: float
    rate: np.ndarray
    source_route: KernelTable
    target_route: KernelTable
    g0: KernelTable
    discrepancy: float
    inequality: InequalityReport
    # G_lambda(t_n, x_p, z_k) with the target on S, from the target-side route
    surface_values: np.ndarray
    surface_regular: np.ndarray

    @property
    def table(self) -> KernelTable:
        return self.source_route

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "discrepancy": self.discrepancy,
            "inequality": self.inequality.to_dict(),
            "shape": list(self.source_route.shape),
        }


def check_inequality(g_lambda: KernelTable, g0: KernelTable, rtol: float = INEQUALITY_RTOL) -> InequalityReport:
    """0 <= G_lambda <= G0 everywhere on the grid, up to rtol * max G0."""
    atol = rtol * max(float(np.max(g0.values)), 1e-300)
    lower = float(np.min(g_lambda.values))
    excess = g_lambda.values - g0.values
    worst = np.unravel_index(int(np.argmax(excess)), excess.shape)
    max_excess = float(excess[worst])
    passed = lower >= -atol and max_excess <= atol
    witness = {"t": float(g0.times[worst[0]]), "source": int(worst[1]), "target": int(worst[2])}
    if not passed:
        logger.warning(
            f"0 <= G_lambda <= G0 violated (min {lower:.3e}, excess {max_excess:.3e}, atol {atol:.3e}); "
            "the time quadrature is too coarse"
        )
    return InequalityReport(passed, lower, max_excess, atol, witness)


def solve_G_lambda(
    lam: float,
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    targets,
    sources=None,
    rate: Optional[float] = None,
) -> GLambdaSolution:
    """
    Both routes for G_lambda(t, x, y), x in `sources` (the nodes by default),
    y in the off-surface `targets`. `rate` replaces r on S by a constant
    (rate=1 gives the G^1 table).
    """
    if lam < 0:
        raise CoefficientError(f"lambda must be non-negative, got {lam}")
    nodes = SurfaceNodes.from_surface(spec, surface)
    sources = nodes.points if sources is None else np.asarray(sources, dtype=float).reshape(-1, nodes.dim)
    targets = np.asarray(targets, dtype=float).reshape(-1, nodes.dim)
    n_nodes, n_src = nodes.size, len(sources)
    r = nodes.r if rate is None else np.full(n_nodes, float(rate))
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps

    vt = solve_Vtilde(spec, surface, grid, sources=np.concatenate([nodes.points, sources]))
    on_nodes = vt.subset(np.arange(n_nodes))
    at_sources = vt.subset(np.arange(n_nodes, n_nodes + n_src))
    g0_all = representation(vt, targets)
    g0_nodes, g0_src = g0_all[:, :n_nodes], g0_all[:, n_nodes:]
    g0_table = KernelTable("G0", times, sources, targets, g0_src, meta={"grid": grid.describe()})

    if lam == 0.0 or not np.any(r):
        logger.info("G_lambda equals G0 (no killing on this grid)")
        regular = at_sources.remainder.copy()
        return GLambdaSolution(
            lam=lam,
            rate=r,
            source_route=g0_table.with_values("G_lambda", g0_src.copy(), route="source", lam=lam),
            target_route=g0_table.with_values("G_lambda", g0_src.copy(), route="target", lam=lam),
            g0=g0_table,
            discrepancy=0.0,
            inequality=check_inequality(g0_table, g0_table),
            surface_values=at_sources.values.copy(),
            surface_regular=regular,
        )

    logger.info(f"G_lambda: lambda={lam:g}, {n_src} sources x {len(targets)} targets, {n_steps} steps")
    wr = nodes.weights * r
    moments_args = (delta, n_steps, grid.order, grid.levels)

    # Source-side route.
    from_sources = kernel_moments(lambda s: nodes.single_layer(s, sources) * r, *moments_args)
    alpha_nodes = kernel_moments(lambda s: nodes.single_layer(s, nodes.points) * r, *moments_args)
    alpha_nodes = alpha_nodes + linear_moments(on_nodes.remainder * wr, delta)
    alpha_src = from_sources + linear_moments(at_sources.remainder * wr, delta)

    carried = np.zeros((n_steps + 1, n_nodes, len(targets)))
    lu = lu_factor(np.eye(n_nodes) + lam * alpha_nodes.start[0])
    for n in range(1, n_steps + 1):
        rhs = g0_nodes[n] - lam * lag_sum(alpha_nodes, carried, n, "ik,km->im", implicit=True)
        carried[n] = lu_solve(lu, rhs)
    source_values = np.zeros_like(g0_src)
    for n in range(1, n_steps + 1):
        source_values[n] = g0_src[n] - lam * lag_sum(alpha_src, carried, n, "pk,km->pm")

    # Target-side route.
    def node_pairs(s):
        return np.swapaxes(nodes.single_layer(s, nodes.points), -1, -2)

    kappa = kernel_moments(lambda s: node_pairs(s) * r[None, :, None], *moments_args)
    kappa = kappa + linear_moments(on_nodes.remainder * wr[None, :, None], delta)
    scale = r / nodes.weights

    def first(tau):
        return nodes.single_layer(tau, sources) * scale

    regular = np.zeros((n_steps + 1, n_src, n_nodes))
    lu = lu_factor((np.eye(n_nodes) + lam * kappa.start[0]).T)
    for n in range(1, n_steps + 1):
        singular = pair_convolution(first, node_pairs, times[n], "pk,kj->pj", grid.order, grid.levels)
        singular += lag_sum(from_sources, on_nodes.remainder, n, "pk,kj->pj")
        rhs = at_sources.remainder[n] - lam * singular
        rhs -= lam * lag_sum(kappa, regular, n, "kj,pk->pj", implicit=True)
        regular[n] = lu_solve(lu, rhs.T).T
    target_values = np.zeros_like(g0_src)
    for n in range(1, n_steps + 1):
        killed = lag_sum(from_sources, g0_nodes, n, "pk,km->pm")
        killed += trapezoid_convolution(regular * wr, g0_nodes, n, delta, "pk,km->pm")
        target_values[n] = g0_src[n] - lam * killed

    surface_values = np.zeros_like(regular)
    for n in range(1, n_steps + 1):
        surface_values[n] = nodes.pointwise_g0(times[n], sources, nodes.points) + regular[n]

    source_table = g0_table.with_values("G_lambda", source_values, route="source", lam=lam)
    target_table = g0_table.with_values("G_lambda", target_values, route="target", lam=lam)
    discrepancy = source_table.sup_difference(target_table)
    inequality = check_inequality(source_table, g0_table)
    logger.info(f"G_lambda routes differ by {discrepancy:.3e}; inequality {'holds' if inequality.passed else 'FAILS'}")
    return GLambdaSolution(
        lam=lam,
        rate=r,
        source_route=source_table,
        target_route=target_table,
        g0=g0_table,
        discrepancy=discrepancy,
        inequality=inequality,
        surface_values=surface_values,
        surface_regular=regular,
    )


def check_lambda_monotone(solutions: list[GLambdaSolution], rtol: float = INEQUALITY_RTOL) -> dict:
    """G_lambda1 >= G_lambda2 pointwise whenever lambda1 < lambda2."""
    ordered = sorted(solutions, key=lambda s: s.lam)
    worst = 0.0
    for low, high in zip(ordered[:-1], ordered[1:]):
        worst = max(worst, float(np.max(high.table.values - low.table.values)))
    atol = rtol * max(float(np.max(ordered[0].g0.values)), 1e-300)
    return {"passed": worst <= atol, "max_increase": worst, "atol": atol, "lambdas": [s.lam for s in ordered]}


def line_targets(half_width: float = 8.0, n: int = 800, membrane: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Cell midpoints of [membrane - L, membrane + L] with n (even) cells, and their widths."""
    if n % 2:
        n += 1
    h = 2.0 * half_width / n
    points = membrane - half_width + (np.arange(n) + 0.5) * h
    return points[:, None], np.full(n, h)


def laplace_functional(
    solution: GLambdaSolution,
    phi: Callable[[np.ndarray], np.ndarray],
    t: float,
    weights: np.ndarray,
    route: str = "source",
) -> np.ndarray:
    """
    int phi(y) G_lambda(t, x, y) dy for every source x by the target
    quadrature `weights`; equals E_x[phi(x0(t)) exp(-lambda int r d eta)].
    """
    table = solution.source_route if route == "source" else solution.target_route
    row = table.at(t)
    values = np.asarray(phi(table.targets), dtype=float).reshape(-1)
    return row @ (values * weights)
