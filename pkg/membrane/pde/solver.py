"""
Theta-scheme solvers for the interface heat problem and the extension Hh.

Off the membrane node the rows discretise u_t = 1/2 b u_xx on the line, or
u_t = sigma^2/2 (u_rr + (d-1)/r u_r) on radial grids with u_r(0) = 0. The far
end(s) carry homogeneous Neumann ghosts. The membrane node holds a single
value of u and one of two transmission rows:

    one-sided       r u_t = s_n [(1+q)/2 D+ u - (1-q)/2 D- u], three-point
                    second-order one-sided stencils; with r = 0 the row is an
                    algebraic constraint on the new level.
    finite-volume   (h + r) u_t = s_n/(2h) [(1+q)(u+ - u) - (1-q)(u - u-)],
                    monotone, and mass-conserving for q = 0.

s_n = (b nu, nu) at the membrane turns d/d nu into d/dN. Systems
(M - theta dt L) u' = (M + (1-theta) dt L) u are assembled once with
scipy.sparse and factorised once with splu.
"""

import logging
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from membrane.errors import CoefficientError, GridError, SupportError, SurfaceError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface, SurfaceKind
from membrane.model.test_functions import TestFunction
from membrane.pde.grid import Geometry, Grid1D
from membrane.pde.gridfunction import GridFunction

logger = logging.getLogger(__name__)


class MembraneRow(str, Enum):
    ONE_SIDED = "one-sided"
    FINITE_VOLUME = "finite-volume"


class _Coefficients:
    """Per-node b and the membrane constants, validated against the grid geometry."""

    def __init__(self, spec: DiffusionSpec, surface: Surface, grid: Grid1D) -> None:
        if grid.geometry is Geometry.LINE:
            if surface.kind is not SurfaceKind.POINT:
                raise SurfaceError("line grids need a point membrane on the real line")
            if abs(grid.membrane - surface.offset) > 1e-12 * (1.0 + abs(surface.offset)):
                raise GridError("the membrane point must be the grid's membrane node")
            self.b = spec.b_at(grid.nodes[:, None])[:, 0, 0]
            z = np.array([[surface.offset]])
        else:
            if surface.kind is not SurfaceKind.SPHERE or surface.dim != grid.dim:
                raise SurfaceError("radial grids need a sphere membrane of the grid's dimension")
            if abs(grid.membrane - surface.radius) > 1e-9 * surface.radius:
                raise GridError("the sphere radius must be the grid's membrane node")
            if not (spec.q.is_constant and spec.r.is_constant):
                raise CoefficientError("the radial reduction needs constant q and r on the sphere")
            sigma2 = spec.isotropic_variance()
            self.b = np.full(len(grid.nodes), sigma2)
            z = np.asarray(surface.center)[None, :] + surface.radius * np.eye(surface.dim)[:1]
        self.q = float(spec.q(z)[0])
        self.r = float(spec.r(z)[0])
        self.normal_variance = float(self.b[grid.membrane_index])
        if np.any(self.b <= 0):
            raise CoefficientError("b must be positive on the grid")


def _bulk_operator(grid: Grid1D, b: np.ndarray) -> sparse.lil_matrix:
    nodes = grid.nodes
    n = len(nodes)
    h = grid.h
    op = sparse.lil_matrix((n, n))
    for j in range(n):
        c = 0.5 * b[j] / h**2
        if grid.geometry is Geometry.RADIAL and j == 0:
            # Regularity at the center: the Laplacian tends to d u_rr.
            op[0, 0] = -2.0 * grid.dim * c
            op[0, 1] = 2.0 * grid.dim * c
            continue
        if j == 0:
            op[0, 0] = -2.0 * c
            op[0, 1] = 2.0 * c
            continue
        if j == n - 1:
            op[j, j - 1] = 2.0 * c
            op[j, j] = -2.0 * c
            continue
        lower, upper = c, c
        if grid.geometry is Geometry.RADIAL:
            drift = 0.5 * b[j] * (grid.dim - 1) / nodes[j] / (2.0 * h)
            lower -= drift
            upper += drift
        op[j, j - 1] = lower
        op[j, j] = -2.0 * c
        op[j, j + 1] = upper
    return op


def _membrane_row(
    op: sparse.lil_matrix,
    mass: np.ndarray,
    grid: Grid1D,
    coeffs: _Coefficients,
    row: MembraneRow,
) -> None:
    m = grid.membrane_index
    h = grid.h
    q, r, s_n = coeffs.q, coeffs.r, coeffs.normal_variance
    for j in range(m - 2, m + 3):
        op[m, j] = 0.0
    if row is MembraneRow.ONE_SIDED:
        plus = 0.5 * (1.0 + q) * s_n / (2.0 * h)
        minus = 0.5 * (1.0 - q) * s_n / (2.0 * h)
        # (1+q)/2 s_n D+ - (1-q)/2 s_n D-
        op[m, m] = -3.0 * plus - 3.0 * minus
        op[m, m + 1] = 4.0 * plus
        op[m, m + 2] = -plus
        op[m, m - 1] = 4.0 * minus
        op[m, m - 2] = -minus
        mass[m] = r
        return
    outer, inner = 1.0, 1.0
    if grid.geometry is Geometry.RADIAL:
        radius = grid.membrane
        outer = ((radius + 0.5 * h) / radius) ** (grid.dim - 1)
        inner = ((radius - 0.5 * h) / radius) ** (grid.dim - 1)
    c = s_n / (2.0 * h * h)
    op[m, m + 1] = (1.0 + q) * outer * c
    op[m, m - 1] = (1.0 - q) * inner * c
    op[m, m] = -((1.0 + q) * outer + (1.0 - q) * inner) * c
    mass[m] = 1.0 + r / h


def _check_explicit_part(grid: Grid1D, coeffs: _Coefficients) -> None:
    ratio = (1.0 - grid.theta) * float(coeffs.b.max()) * grid.dt / grid.h**2
    if ratio > 1.0:
        suggested = grid.h**2 / ((1.0 - grid.theta) * float(coeffs.b.max()))
        raise GridError(
            f"(1-theta) b dt/h^2 = {ratio:.3g} > 1 loses diagonal dominance; use dt <= {suggested:.3g}",
            suggested_dt=suggested,
        )


def _initial_values(phi_init, grid: Grid1D, surface: Surface) -> np.ndarray:
    if grid.geometry is Geometry.RADIAL:
        direction = np.zeros(grid.dim)
        direction[0] = 1.0
        points = np.asarray(surface.center) + grid.nodes[:, None] * direction
    else:
        points = grid.nodes[:, None]
    if isinstance(phi_init, TestFunction):
        values = phi_init.value(0.0, points)
    else:
        values = phi_init(points)
    values = np.asarray(values, dtype=float).reshape(len(grid.nodes))
    if not np.all(np.isfinite(values)):
        raise GridError("initial data is not finite on the grid")
    return values


def _save_stride(n_steps: int, save_every: Optional[int]) -> int:
    if save_every is not None:
        return max(1, int(save_every))
    return max(1, n_steps // 2000)


def solve_interface_heat(
    spec: DiffusionSpec,
    surface: Surface,
    phi_init: Union[TestFunction, Callable[[np.ndarray], np.ndarray]],
    grid: Grid1D,
    membrane_row: Union[MembraneRow, str] = MembraneRow.ONE_SIDED,
    save_every: Optional[int] = None,
) -> GridFunction:
    """
    u(t, x) = E_x phi(x(t)) by the theta-scheme on a line or radial grid.

    Refuses grids whose explicit part is not diagonally dominant, with a
    suggested dt. The final time level is always saved.
    """
    row = MembraneRow(membrane_row)
    coeffs = _Coefficients(spec, surface, grid)
    _check_explicit_part(grid, coeffs)
    op = _bulk_operator(grid, coeffs.b)
    mass = np.ones(len(grid.nodes))
    _membrane_row(op, mass, grid, coeffs, row)

    dt, theta = grid.dt, grid.theta
    op = op.tocsr()
    mass_m = sparse.diags(mass)
    lhs = (mass_m - theta * dt * op).tolil()
    rhs = (mass_m + (1.0 - theta) * dt * op).tolil()
    m = grid.membrane_index
    algebraic = row is MembraneRow.ONE_SIDED and coeffs.r == 0.0
    if algebraic:
        lhs[m, :] = op[m, :].toarray()
        rhs[m, :] = 0.0
    solver = splu(lhs.tocsc())
    rhs = rhs.tocsr()

    u = _initial_values(phi_init, grid, surface)
    n_steps = grid.n_steps
    stride = _save_stride(n_steps, save_every)
    saved_t = [0.0]
    saved_u = [u.copy()]
    logger.info(
        f"Interface heat solve: {grid.geometry.value}, {len(grid.nodes)} nodes, {n_steps} steps, "
        f"row={row.value}, q={coeffs.q:g}, r={coeffs.r:g}"
    )
    for k in range(1, n_steps + 1):
        u = solver.solve(rhs @ u)
        if k % stride == 0 or k == n_steps:
            saved_t.append(k * dt)
            saved_u.append(u.copy())
    values = np.array(saved_u)
    if not np.all(np.isfinite(values)):
        raise GridError("the theta-scheme produced non-finite values")
    center = np.asarray(surface.center) if grid.geometry is Geometry.RADIAL else None
    return GridFunction(
        grid=grid,
        times=np.array(saved_t),
        values=values,
        center=center,
        meta={
            "solver": "interface-heat",
            "membrane_row": row.value,
            "q": coeffs.q,
            "r": coeffs.r,
            "normal_variance": coeffs.normal_variance,
            "grid": grid.describe(),
        },
    )


def boundary_support(h, support: Optional[tuple[float, float]] = None) -> tuple[float, float]:
    """The time support [A, B] of boundary data, from `support` or h.support."""
    if support is None:
        support = getattr(h, "support", None)
    if support is None:
        raise SupportError("boundary data must have compact support in t; pass its support")
    start, end = float(support[0]), float(support[1])
    if not end > start >= 0.0:
        raise SupportError(f"invalid time support [{start}, {end}]")
    probe = np.linspace(end, end + max(1.0, end - start), 64)
    if np.max(np.abs(np.asarray(h(probe), dtype=float))) > 1e-12:
        raise SupportError(f"boundary data does not vanish after t={end:g}")
    return start, end


def solve_extension_Hh(
    spec: DiffusionSpec,
    surface: Surface,
    h: Callable[[np.ndarray], np.ndarray],
    grid: Grid1D,
    support: Optional[tuple[float, float]] = None,
    save_every: Optional[int] = None,
) -> GridFunction:
    """
    The two-sided extension Hh of boundary data h(t) on S (constant over S).

    Solves dU/dt + 1/2 b U_xx = 0 on each side with U = h on S and U(T0) = 0,
    T0 the end of the support of h, by a theta-scheme in reversed time; Hh is
    zero for t >= T0. The grid's t_end is ignored.
    """
    _, t0 = boundary_support(h, support)
    coeffs = _Coefficients(spec, surface, grid)
    _check_explicit_part(grid, coeffs)
    op = _bulk_operator(grid, coeffs.b).tocsr()
    n = len(grid.nodes)
    n_steps = max(1, int(np.ceil(t0 / grid.dt - 1e-9)))
    dt, theta = t0 / n_steps, grid.theta
    identity = sparse.identity(n, format="csr")
    lhs = (identity - theta * dt * op).tolil()
    rhs = (identity + (1.0 - theta) * dt * op).tolil()
    m = grid.membrane_index
    lhs[m, :] = 0.0
    lhs[m, m] = 1.0
    rhs[m, :] = 0.0
    solver = splu(lhs.tocsc())
    rhs = rhs.tocsr()

    # Reversed clock sigma = T0 - t; physical times T0 - k dt, clipped at 0.
    u = np.zeros(n)
    stride = _save_stride(n_steps, save_every)
    saved_t = [t0]
    saved_u = [u.copy()]
    for k in range(1, n_steps + 1):
        t_phys = max(t0 - k * dt, 0.0) if k < n_steps else 0.0
        b = rhs @ u
        b[m] = float(h(np.array([t_phys]))[0])
        u = solver.solve(b)
        if k % stride == 0 or k == n_steps:
            saved_t.append(t_phys)
            saved_u.append(u.copy())
    order = np.argsort(saved_t, kind="stable")
    center = np.asarray(surface.center) if grid.geometry is Geometry.RADIAL else None
    logger.info(f"Extension Hh: support end T0={t0:g}, {n_steps} reversed steps")
    return GridFunction(
        grid=grid,
        times=np.asarray(saved_t)[order],
        values=np.asarray(saved_u)[order],
        center=center,
        zero_after=t0,
        meta={
            "solver": "extension-Hh",
            "T0": t0,
            "q": coeffs.q,
            "r": coeffs.r,
            "normal_variance": coeffs.normal_variance,
            "grid": grid.describe(),
        },
    )
