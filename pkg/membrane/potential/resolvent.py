"""
The resolvent equation lambda f - K~f = psi on S and its solution V_lambda.

V_lambda is carried as a single layer over S with the skew kernel V~,

    V(t, x) = int_0^{T-t} ds int_S V~(s, x, z) D(t + s, z) d sigma_z,
    D = psi - lambda V + r dV/dt,

so that K V = -D on S and lambda V - K V - r dV/dt = psi. The march runs
backwards from the end of psi's time support, where V vanishes.

Sign convention: for a single layer with density rho,
dV/dN(x+/-) = -/+ rho + (principal value), hence K V = -rho.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from membrane.errors import CoefficientError, GridError, SupportError, SurfaceError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.model.test_functions import TestFunction
from membrane.potential.fringe import fringe_points, one_sided_derivatives, split_fringe
from membrane.potential.kernels import SurfaceNodes
from membrane.potential.killing import solve_G_lambda
from membrane.potential.quadrature import (
    HatMoments,
    kernel_moments,
    lag_sum,
    lead_sum,
    linear_moments,
    trapezoid_convolution,
)
from membrane.potential.representation import VtildeTable, solve_Vtilde
from membrane.potential.tables import PotentialGrid
from membrane.pde.operators import SurfaceTable

logger = logging.getLogger(__name__)

SurfaceData = Union[TestFunction, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _time_support(psi) -> Optional[tuple[float, float]]:
    support = getattr(psi, "time_support", None)
    if support is None:
        factor = getattr(psi, "time_factor", None)
        support = getattr(factor, "support", None)
    return None if support is None else (float(support[0]), float(support[1]))


@dataclass
class ResolventProblem:
    """
    lambda f - K~f = psi on S. `psi(t, points)` is bounded with compact
    support in t, taken from `support` or from the function itself.
    """

    lam: float
    psi: SurfaceData
    spec: DiffusionSpec
    surface: Surface
    support: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise CoefficientError(f"the resolvent needs lambda > 0, got {self.lam}")
        support = self.support if self.support is not None else _time_support(self.psi)
        if support is None or not np.all(np.isfinite(support)):
            raise SupportError("psi must have compact support in time (pass support=(start, end))")
        if support[1] < support[0]:
            raise SupportError(f"empty time support {support}")
        self.support = (float(support[0]), float(support[1]))

    @property
    def horizon(self) -> float:
        """sup of the time support: V_lambda vanishes from here on."""
        return self.support[1]

    def psi_values(self, times: np.ndarray, points: np.ndarray) -> np.ndarray:
        """psi on the (N+1, M) grid of times and surface points."""
        tt = np.repeat(times[:, None], len(points), axis=1)
        xx = np.broadcast_to(points, (len(times), *points.shape))
        if isinstance(self.psi, TestFunction):
            values = self.psi.value(tt, xx)
        else:
            values = self.psi(tt, xx)
        return np.broadcast_to(np.asarray(values, dtype=float), tt.shape).copy()

    def describe(self) -> dict:
        return {"lambda": self.lam, "support": list(self.support), "psi": getattr(self.psi, "name", repr(self.psi))}


@dataclass
class VLambdaSolution:
    problem: ResolventProblem
    grid: PotentialGrid
    times: np.ndarray
    nodes: SurfaceNodes
    surface: np.ndarray  # (N+1, M) V_lambda on the nodes
    density: np.ndarray  # (N+1, M) psi - lambda V + r dV/dt
    fringe: Optional[np.ndarray] = None  # (N+1, 7M) V_lambda on fringe_points(nodes, grid.fringe)
    meta: dict = field(default_factory=dict)

    def surface_table(self) -> SurfaceTable:
        return SurfaceTable(self.times, self.nodes.points, self.surface, {"name": "V_lambda", **self.meta})

    def at(self, t: float) -> np.ndarray:
        return self.surface[int(np.argmin(np.abs(self.times - t)))]


def _surface_moments(nodes: SurfaceNodes, vt: VtildeTable, grid: PotentialGrid, sources) -> HatMoments:
    """Hat moments of w_k V~(s, x_p, z_k) for the given sources, (N, P, M)."""
    analytic = kernel_moments(lambda s: nodes.single_layer(s, sources), grid.delta, grid.n_steps, grid.order, grid.levels)
    return analytic + linear_moments(vt.remainder * nodes.weights, grid.delta)


def _check_grid(problem: ResolventProblem, grid: PotentialGrid) -> None:
    if grid.t_end < problem.horizon - 1e-12:
        raise GridError(
            f"time grid ends at {grid.t_end} before psi's support ends at {problem.horizon}",
        )


def _lead_sum_reversed(moments: HatMoments, f: np.ndarray, n: int) -> np.ndarray:
    """lead_sum(..., "jk,k->j", implicit=True) accumulated from the farthest cell inward."""
    n_total = len(f) - 1
    total = np.zeros(moments.start.shape[1])
    for c in range(n_total - n, 0, -1):
        total += moments.end[c - 1] @ f[n + c]
        if c > 1:
            total += moments.start[c - 1] @ f[n + c - 1]
    return total


def solve_V_lambda(
    problem: ResolventProblem,
    grid: PotentialGrid,
    with_fringe: bool = True,
    order: Optional[np.ndarray] = None,
    reverse: bool = False,
) -> VLambdaSolution:
    """
    Backward march for V_lambda on the nodes, then V_lambda at the fringe
    points for one-sided derivatives. `order` permutes the nodes and `reverse`
    accumulates the history from the far end (both used by the uniqueness probe).
    """
    _check_grid(problem, grid)
    spec, surface, lam = problem.spec, problem.surface, problem.lam
    base = SurfaceNodes.from_surface(spec, surface)
    perm = np.arange(base.size) if order is None else np.asarray(order)
    nodes = SurfaceNodes(
        base.points[perm], base.weights[perm], base.normals[perm], base.half_width[perm],
        base.curvature, base.sigma2, base.q[perm], base.r[perm], base.center, base.radius,
    )
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps
    psi = problem.psi_values(times, nodes.points)
    m = nodes.size
    logger.info(f"V_lambda march: lambda={lam:g}, {m} nodes, {n_steps} steps, support {problem.support}")

    vt = _permuted_vtilde(spec, surface, grid, nodes, perm)
    mu = _surface_moments(nodes, vt, grid, nodes.points)
    a1 = mu.start[0]
    delay = nodes.r / delta
    lu = lu_factor(np.eye(m) + a1 * (lam + delay)[None, :])

    values = np.zeros((n_steps + 1, m))
    density = np.zeros((n_steps + 1, m))
    density[n_steps] = psi[n_steps]
    for n in range(n_steps - 1, -1, -1):
        ahead = values[n + 1]
        if reverse:
            history = _lead_sum_reversed(mu, density, n)
        else:
            history = lead_sum(mu, density, n, "jk,k->j", implicit=True)
        rhs = a1 @ (psi[n] + delay * ahead) + history
        values[n] = lu_solve(lu, rhs)
        density[n] = psi[n] - lam * values[n] + nodes.r * (ahead - values[n]) / delta
    if not np.all(np.isfinite(values)):
        raise GridError("V_lambda march produced non-finite values; refine the time grid")

    fringe = None
    if with_fringe:
        points = fringe_points(nodes, grid.fringe)
        at_fringe = solve_Vtilde(spec, surface, grid, sources=points)
        mu_x = _surface_moments(nodes, _reorder_targets(at_fringe, perm), grid, points)
        fringe = np.zeros((n_steps + 1, len(points)))
        for n in range(n_steps):
            fringe[n] = lead_sum(mu_x, density, n, "pk,k->p")

    return VLambdaSolution(
        problem=problem,
        grid=grid,
        times=times,
        nodes=nodes,
        surface=values,
        density=density,
        fringe=fringe,
        meta={"grid": grid.describe(), **problem.describe()},
    )


def _reorder_targets(vt: VtildeTable, perm: np.ndarray) -> VtildeTable:
    """Put the node (target) axis of V~ in the permuted node order."""
    if np.array_equal(perm, np.arange(len(perm))):
        return vt
    return VtildeTable(
        vt.name, vt.times, vt.sources, vt.targets[perm], vt.values[:, :, perm], vt.singularity, dict(vt.meta),
        remainder=vt.remainder[:, :, perm], nodes=vt.nodes, grid=vt.grid,
    )


def _permuted_vtilde(spec, surface, grid, nodes: SurfaceNodes, perm: np.ndarray) -> VtildeTable:
    vt = solve_Vtilde(spec, surface, grid, sources=nodes.points)
    return _reorder_targets(vt, perm)


@dataclass
class ResidualReport:
    """sup over the surface grid of |lambda V - K V - r dV/dt - psi|."""

    passed: bool
    sup_residual: float
    relative: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    residual: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "residual"}


def check_resolvent(solution: VLambdaSolution, tolerance: float = 5e-3) -> ResidualReport:
    """
    Residual of the resolvent equation from the fringe values: one-sided
    conormal derivatives by Richardson stencils, dV/dt by central differences.
    """
    if solution.fringe is None:
        raise SurfaceError("check_resolvent needs V_lambda on the fringe points (with_fringe=True)")
    nodes, problem = solution.nodes, solution.problem
    psi = problem.psi_values(solution.times, nodes.points)
    blocks = split_fringe(solution.fringe, nodes.size, axis=1)
    blocks[0] = solution.surface
    plus, minus = one_sided_derivatives(blocks, solution.grid.fringe, nodes.sigma2)
    q = nodes.q[None, :]
    k_term = 0.5 * (1.0 + q) * plus - 0.5 * (1.0 - q) * minus
    dvdt = np.gradient(solution.surface, solution.times, axis=0)
    residual = problem.lam * solution.surface - k_term - nodes.r[None, :] * dvdt - psi
    worst = np.unravel_index(int(np.argmax(np.abs(residual))), residual.shape)
    sup = float(abs(residual[worst]))
    scale = max(float(np.max(np.abs(psi))), 1e-300)
    report = ResidualReport(
        passed=sup <= tolerance,
        sup_residual=sup,
        relative=sup / scale,
        tolerance=tolerance,
        witness={"t": float(solution.times[worst[0]]), "node": nodes.points[worst[1]].tolist()},
        residual=residual,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Resolvent residual {sup:.3e} (tolerance {tolerance:g})")
    return report


def resolvent_refinement(problem: ResolventProblem, grid: PotentialGrid, factors: tuple[int, ...] = (1, 2)) -> dict:
    """Residuals on successively halved time steps and their ratios."""
    residuals = [check_resolvent(solve_V_lambda(problem, grid.refined(f))).sup_residual for f in factors]
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(residuals[:-1], residuals[1:])]
    return {"factors": list(factors), "residuals": residuals, "ratios": ratios}


def uniqueness_probe(problem: ResolventProblem, grid: PotentialGrid, seed: int = 0) -> dict:
    """
    Re-run the march with the nodes permuted and the history summed in the
    opposite order; the tables must agree to accumulated rounding.
    """
    reference = solve_V_lambda(problem, grid, with_fringe=False)
    perm = np.random.default_rng(seed).permutation(reference.nodes.size)
    other = solve_V_lambda(problem, grid, with_fringe=False, order=perm, reverse=True)
    restored = np.empty_like(other.surface)
    restored[:, perm] = other.surface
    difference = float(np.max(np.abs(reference.surface - restored)))
    scale = max(float(np.max(np.abs(reference.surface))), 1e-300)
    tolerance = 10.0 * np.finfo(float).eps * grid.n_steps * max(reference.nodes.size, 1) * scale
    passed = difference <= tolerance
    if not passed:
        logger.warning(f"V_lambda depends on the summation order: {difference:.3e} > {tolerance:.3e}")
    return {"passed": passed, "difference": difference, "tolerance": tolerance, "permutation": perm.tolist()}


def v_lambda_by_killing(problem: ResolventProblem, grid: PotentialGrid, sources=None) -> np.ndarray:
    """
    V_lambda(t_n, x) = int_0^{T-t_n} int_S G^1_lambda(s, x, y) psi(t_n + s, y) d sigma ds
    from the r = 1 killed kernel on S, (N+1, P). Agrees with the march only when r = 0.
    """
    _check_grid(problem, grid)
    nodes = SurfaceNodes.from_surface(problem.spec, problem.surface)
    if np.any(nodes.r != 0.0):
        logger.warning("the killed-kernel route describes V_lambda only for r = 0 on S")
    sources = nodes.points if sources is None else np.asarray(sources, dtype=float).reshape(-1, nodes.dim)
    killed = solve_G_lambda(problem.lam, problem.spec, problem.surface, grid, targets=sources, sources=sources, rate=1.0)
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps
    psi = problem.psi_values(times, nodes.points)
    direct = kernel_moments(lambda s: nodes.single_layer(s, sources), delta, n_steps, grid.order, grid.levels)
    weighted = killed.surface_regular * nodes.weights
    reversed_psi = psi[::-1]
    values = np.zeros((n_steps + 1, len(sources)))
    for n in range(n_steps):
        values[n] = lead_sum(direct, psi, n, "pk,k->p")
        values[n] += trapezoid_convolution(weighted, reversed_psi, n_steps - n, delta, "pk,k->p")
    return values


@dataclass
class JumpReport:
    passed: bool
    plus_error: float
    minus_error: float
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def single_layer_jump(
    spec: DiffusionSpec,
    surface: Surface,
    grid: PotentialGrid,
    density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: Optional[float] = None,
    tolerance: float = 1e-2,
) -> JumpReport:
    """
    For the plain single layer U(t, x) = int_0^t int_S g0(t - tau, x, z) rho(tau, z),
    check dU/dN(x+/-) = -/+ rho(t, x) + PV at the nodes, PV from the
    double-layer kernel in the target variable. Relative to max |rho|.
    """
    nodes = SurfaceNodes.from_surface(spec, surface)
    times, delta, n_steps = grid.times, grid.delta, grid.n_steps
    n = n_steps if t is None else int(np.argmin(np.abs(times - t)))
    tt = np.repeat(times[:, None], nodes.size, axis=1)
    rho = np.asarray(density(tt, np.broadcast_to(nodes.points, (len(times), *nodes.points.shape))), dtype=float)
    rho = np.broadcast_to(rho, tt.shape)
    points = fringe_points(nodes, grid.fringe)
    layer = kernel_moments(lambda s: nodes.single_layer(s, points), delta, n_steps, grid.order, grid.levels)
    values = lag_sum(layer, rho, n, "pk,k->p")
    blocks = split_fringe(values[None, :], nodes.size, axis=1)
    plus, minus = one_sided_derivatives(blocks, grid.fringe, nodes.sigma2)
    # on a sphere nu_j . (z_k - z_j) = nu_k . (z_j - z_k): the source-side kernel is the transposed double layer
    principal = kernel_moments(
        lambda s: np.swapaxes(nodes.double_layer(s, nodes.points), -1, -2),
        delta, n_steps, grid.order, grid.levels,
    )
    pv = lag_sum(principal, rho, n, "pk,k->p")
    scale = max(float(np.max(np.abs(rho))), 1e-300)
    plus_error = float(np.max(np.abs(plus[0] - (pv - rho[n])))) / scale
    minus_error = float(np.max(np.abs(minus[0] - (pv + rho[n])))) / scale
    passed = max(plus_error, minus_error) <= tolerance
    logger.info(f"Single-layer jump errors: plus {plus_error:.3e}, minus {minus_error:.3e}")
    return JumpReport(passed, plus_error, minus_error, tolerance)

