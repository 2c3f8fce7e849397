"""
The skew transition density G0 through its single-layer representation

    G0(t, x, y) = g0(t, x, y) + int_0^t d tau int_S V~(tau, x, z) dg0(t - tau, z, y)/dN(z) q(z) d sigma_z,

with V~ on S the solution of the same equation restricted to y in S.

V~ is split as g0 + W. The first iterate (g0 against the conormal kernel) is
integrated directly on a rule graded at both ends; W is piecewise linear in
time and marched with hat moments of the kernel, implicit in the newest step.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.potential.fringe import fringe_points, one_sided_derivatives, one_sided_limits, split_fringe
from membrane.potential.kernels import SurfaceNodes
from membrane.potential.quadrature import kernel_moments, lag_sum, pair_convolution
from membrane.potential.tables import KernelTable, PotentialGrid

logger = logging.getLogger(__name__)


@dataclass
class VtildeTable(KernelTable):
    """V~(t_n, x_p, z_j) on the surface nodes, with the remainder W = V~ - g0 the marches reuse."""

    remainder: Optional[np.ndarray] = None
    nodes: Optional[SurfaceNodes] = None
    grid: Optional[PotentialGrid] = None

    def subset(self, index) -> "VtildeTable":
        """The same solution restricted to some of its sources."""
        index = np.asarray(index)
        return VtildeTable(
            self.name,
            self.times,
            self.sources[index],
            self.targets,
            self.values[:, index],
            self.singularity,
            dict(self.meta),
            remainder=self.remainder[:, index],
            nodes=self.nodes,
            grid=self.grid,
        )


@dataclass
class G0Table(KernelTable):
    """G0 at off-surface targets plus the one-sided limits G0(t, x, z_j +/-) at the nodes."""

    surface_plus: Optional[np.ndarray] = None
    surface_minus: Optional[np.ndarray] = None


def _as_sources(nodes: SurfaceNodes, points) -> np.ndarray:
    if points is None:
        return nodes.points
    return np.asarray(points, dtype=float).reshape(-1, nodes.dim)


def solve_Vtilde(
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    sources=None,
) -> VtildeTable:
    """
    V~(t, x, y) for y on the surface nodes and x in `sources` (the nodes by
    default). q = 0 gives V~ = g0 exactly.
    """
    nodes = SurfaceNodes.from_surface(spec, surface)
    sources = _as_sources(nodes, sources)
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps
    remainder = np.zeros((n_steps + 1, len(sources), nodes.size))

    if np.any(nodes.q != 0.0):
        logger.info(f"V~ march: {len(sources)} sources x {nodes.size} nodes, {n_steps} steps")
        moments = kernel_moments(
            lambda s: nodes.double_layer(s, nodes.points) * nodes.q[None, :, None],
            delta,
            n_steps,
            grid.order,
            grid.levels,
        )
        scale = nodes.q / nodes.weights

        def first(tau):
            return nodes.single_layer(tau, sources) * scale

        def second(s):
            return nodes.double_layer(s, nodes.points)

        lu = lu_factor((np.eye(nodes.size) - moments.start[0]).T)
        for n in range(1, n_steps + 1):
            rhs = pair_convolution(first, second, times[n], "pi,ij->pj", grid.order, grid.levels)
            rhs += lag_sum(moments, remainder, n, "ij,pi->pj", implicit=True)
            remainder[n] = lu_solve(lu, rhs.T).T
    else:
        logger.debug("V~ with q = 0 is g0 on S")

    values = np.zeros_like(remainder)
    for n in range(1, n_steps + 1):
        values[n] = nodes.pointwise_g0(times[n], sources, nodes.points) + remainder[n]
    return VtildeTable(
        name="Vtilde",
        times=times,
        sources=sources,
        targets=nodes.points,
        values=values,
        meta={"grid": grid.describe(), "nodes": nodes.size},
        remainder=remainder,
        nodes=nodes,
        grid=grid,
    )


def representation(vtilde: VtildeTable, targets) -> np.ndarray:
    """G0(t_n, x_p, y_m) from the representation formula, (N+1, P, Y); row 0 is zero."""
    nodes, grid = vtilde.nodes, vtilde.grid
    sources = vtilde.sources
    targets = np.asarray(targets, dtype=float).reshape(-1, nodes.dim)
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps
    values = np.zeros((n_steps + 1, len(sources), len(targets)))

    if np.any(nodes.q != 0.0):
        moments = kernel_moments(
            lambda s: nodes.double_layer(s, targets) * nodes.q[None, :, None],
            delta,
            n_steps,
            grid.order,
            grid.levels,
        )
        scale = nodes.q / nodes.weights

        def first(tau):
            return nodes.single_layer(tau, sources) * scale

        def second(s):
            return nodes.double_layer(s, targets)

        for n in range(1, n_steps + 1):
            values[n] = pair_convolution(first, second, times[n], "pi,im->pm", grid.order, grid.levels)
            values[n] += lag_sum(moments, vtilde.remainder, n, "im,pi->pm")
    for n in range(1, n_steps + 1):
        values[n] += nodes.pointwise_g0(times[n], sources, targets)
    return values


def solve_G0(
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    targets,
    sources=None,
    vtilde: Optional[VtildeTable] = None,
    one_sided: bool = True,
) -> G0Table:
    """
    The skew transition density G0(t, x, y) at off-surface targets, and with
    `one_sided` its limits from both sides at every node, extrapolated from the
    fringe offsets.
    """
    vt = vtilde if vtilde is not None else solve_Vtilde(spec, surface, grid, sources)
    nodes = vt.nodes
    targets = np.asarray(targets, dtype=float).reshape(-1, nodes.dim)
    n_targets = len(targets)
    plus = minus = None
    if one_sided:
        everything = np.concatenate([targets, fringe_points(nodes, grid.fringe)])
        values = representation(vt, everything)
        blocks = split_fringe(values[:, :, n_targets:], nodes.size, axis=2)
        plus, minus = one_sided_limits(blocks)
        values = values[:, :, :n_targets]
    else:
        values = representation(vt, targets)
    logger.info(f"G0: {len(vt.sources)} sources x {n_targets} targets on {grid.n_steps} steps")
    return G0Table(
        name="G0",
        times=vt.times,
        sources=vt.sources,
        targets=targets,
        values=values,
        meta={"grid": grid.describe(), "q_max": float(np.max(np.abs(nodes.q)))},
        surface_plus=plus,
        surface_minus=minus,
    )


def skew_density_1d(t, x, y, q: float, sigma2: float = 1.0, membrane: float = 0.0) -> np.ndarray:
    """
    Transition density of the skew diffusion on the line with the membrane at
    `membrane`: g(y - x) + q sgn(y) g(|x| + |y|), coordinates relative to it.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float) - membrane
    y = np.asarray(y, dtype=float) - membrane

    def g(z):
        return np.exp(-(z**2) / (2.0 * sigma2 * t)) / np.sqrt(2.0 * math.pi * sigma2 * t)

    return g(y - x) + q * np.sign(y) * g(np.abs(x) + np.abs(y))


@dataclass
class FluxReport:
    """max over (t, y) of the residual of the transmission condition on G0 at x in S."""

    passed: bool
    max_residual: float
    relative: float
    tolerance: float
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_flux_condition(
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    targets,
    tolerance: float = 5e-3,
) -> FluxReport:
    """
    (1+q)/2 dG0(t, x+, y)/dN(x) - (1-q)/2 dG0(t, x-, y)/dN(x) for x on the
    nodes, derivatives in the source from fringe stencils.
    """
    nodes = SurfaceNodes.from_surface(spec, surface)
    sources = fringe_points(nodes, grid.fringe)
    table = solve_G0(spec, surface, grid, targets, sources=sources, one_sided=False)
    blocks = split_fringe(table.values, nodes.size, axis=1)
    plus, minus = one_sided_derivatives(blocks, grid.fringe, nodes.sigma2)
    q = nodes.q[None, :, None]
    residual = np.abs(0.5 * (1.0 + q) * plus - 0.5 * (1.0 - q) * minus)[1:]
    worst = np.unravel_index(int(np.argmax(residual)), residual.shape)
    max_residual = float(residual[worst])
    scale = max(float(np.max(np.abs(plus[1:]))), float(np.max(np.abs(minus[1:]))), 1e-300)
    report = FluxReport(
        passed=max_residual <= tolerance,
        max_residual=max_residual,
        relative=max_residual / scale,
        tolerance=tolerance,
        witness={
            "t": float(table.times[worst[0] + 1]),
            "node": nodes.points[worst[1]].tolist(),
            "target": table.targets[worst[2]].tolist(),
        },
    )
    level = logging.DEBUG if report.passed else logging.WARNING
    logger.log(level, f"Flux condition residual {max_residual:.3e} (relative {report.relative:.3e})")
    return report


@dataclass
class AverageIdentityReport:
    """max |V~(t, x, y) - (G0(t, x, y+) + G0(t, x, y-)) / 2| over y on the nodes."""

    passed: bool
    max_difference: float
    relative: float
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_average_identity(
    vtilde: VtildeTable,
    g0_table: G0Table,
    tolerance: float = 1e-2,
    start: int = 1,
) -> AverageIdentityReport:
    """Compare V~ with the mean of the one-sided limits of G0, rows n >= start, relative to max V~."""
    average = 0.5 * (g0_table.surface_plus + g0_table.surface_minus)
    diff = np.abs(vtilde.values[start:] - average[start:])
    max_difference = float(diff.max()) if diff.size else 0.0
    scale = max(float(np.max(np.abs(vtilde.values[start:]))), 1e-300)
    relative = max_difference / scale
    return AverageIdentityReport(relative <= tolerance, max_difference, relative, tolerance)


def refinement_diagnostic(
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    sources=None,
    factors: tuple[int, ...] = (1, 2, 4),
) -> dict:
    """
    Solve V~ on successively refined time grids and compare on the coarse
    times. Differences that do not shrink point at an unresolved quadrature.
    """
    solutions = [solve_Vtilde(spec, surface, grid.refined(f), sources) for f in factors]
    coarse = solutions[0]
    differences = []
    for k in range(1, len(factors)):
        a = solutions[k - 1].values[:: factors[k - 1] // factors[0]]
        b = solutions[k].values[:: factors[k] // factors[0]]
        scale = max(float(np.max(np.abs(b[1:]))), 1e-300)
        differences.append(float(np.max(np.abs(a[1:] - b[1:]))) / scale)
    converging = all(later < earlier or later <= 1e-12 for earlier, later in zip(differences[:-1], differences[1:]))
    if not converging:
        logger.warning(f"V~ quadrature refinement does not converge: relative differences {differences}")
    return {"factors": list(factors), "differences": differences, "converging": converging, "n_steps": coarse.grid.n_steps}
