"""
The membrane operators K and K~ on test functions and grid solutions, and the
discrete maximum-principle audit.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from membrane.errors import SurfaceError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import ON_TOLERANCE, Surface
from membrane.model.test_functions import TestFunction
from membrane.pde.grid import Grid1D
from membrane.pde.gridfunction import GridFunction
from membrane.pde.solver import solve_extension_Hh

logger = logging.getLogger(__name__)


def _require_on_surface(surface: Surface, x) -> np.ndarray:
    pts = surface._as_points(x)
    band = ON_TOLERANCE * (1.0 + np.linalg.norm(pts, axis=-1))
    if np.any(surface.unsigned_distance(pts) > band):
        raise SurfaceError("K is defined on S only; project the point first")
    return pts


def _grid_K(gf: GridFunction, q: float, s_n: float) -> np.ndarray:
    plus, minus = gf.one_sided_normal_derivatives()
    return 0.5 * (1.0 + q) * s_n * plus - 0.5 * (1.0 - q) * s_n * minus


def evaluate_K(
    f: Union[TestFunction, GridFunction],
    spec: DiffusionSpec,
    surface: Surface,
    t: float,
    x,
) -> np.ndarray:
    """
    Kf(t, x) = (1+q)/2 df/dN(t, x+) - (1-q)/2 df/dN(t, x-) for x in S.

    Test functions use their analytic one-sided gradients; grid functions use
    the three-point one-sided stencils at the saved time nearest t.
    """
    pts = _require_on_surface(surface, x)
    if isinstance(f, TestFunction):
        return f.Kf(t, pts, spec, surface)
    q = float(spec.q(pts).ravel()[0])
    s_n = float(spec.normal_variance(pts, surface).ravel()[0])
    k_values = _grid_K(f, q, s_n)
    return np.full(pts.shape[:-1], k_values[f.time_index(t)])


@dataclass
class SurfaceTable:
    """A function tabulated on a time grid times surface points."""

    times: np.ndarray
    points: np.ndarray
    values: np.ndarray  # (n_t, n_points)
    meta: dict = field(default_factory=dict)

    def at(self, t, y=None) -> np.ndarray:
        """Linear interpolation in t; values are constant over S for the supported surfaces."""
        t = np.asarray(t, dtype=float)
        column = self.values[:, 0]
        if y is not None and self.values.shape[1] > 1:
            y = np.asarray(y, dtype=float)
            d2 = ((y[..., None, :] - self.points) ** 2).sum(axis=-1)
            idx = np.argmin(d2, axis=-1)
            return np.array(
                [np.interp(tt, self.times, self.values[:, j], right=0.0) for tt, j in zip(np.ravel(t), np.ravel(idx))]
            ).reshape(np.shape(idx))
        return np.interp(t, self.times, column, right=0.0)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def write_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dim = self.points.shape[-1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *[f"y_{i + 1}" for i in range(dim)], "value"])
            for k, t in enumerate(self.times):
                for j, y in enumerate(self.points):
                    writer.writerow([f"{t:.10g}", *[f"{v:.10g}" for v in y], f"{self.values[k, j]:.14g}"])
        return path


def evaluate_Ktilde(
    h: Callable[[np.ndarray], np.ndarray],
    spec: DiffusionSpec,
    surface: Surface,
    grid: Grid1D,
    support: Optional[tuple[float, float]] = None,
    extension: Optional[GridFunction] = None,
) -> SurfaceTable:
    """
    K~h = r d(Hh)/dt + (1+q)/2 d(Hh)/dN+ - (1-q)/2 d(Hh)/dN- on the time grid of
    the extension times the surface quadrature points. Time derivatives are
    centred differences of the membrane trace; space derivatives one-sided.
    """
    hh = extension if extension is not None else solve_extension_Hh(spec, surface, h, grid, support=support)
    q, r, s_n = hh.meta["q"], hh.meta["r"], hh.meta["normal_variance"]
    trace = hh.membrane_trace()
    dtrace = np.gradient(trace, hh.times) if len(hh.times) > 1 else np.zeros_like(trace)
    values = r * dtrace + _grid_K(hh, q, s_n)
    points = surface.quadrature().points
    table = np.repeat(values[:, None], len(points), axis=1)
    return SurfaceTable(times=hh.times, points=points, values=table, meta={"q": q, "r": r, "T0": hh.zero_after})


@dataclass
class MaximumPrincipleReport:
    passed: bool
    lower: float
    upper: float
    min_value: float
    max_value: float
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def maximum_principle_audit(
    gf: GridFunction,
    lower: float = 0.0,
    upper: float = 1.0,
    tolerance: float = 1e-10,
) -> MaximumPrincipleReport:
    """Check lower - tol <= u <= upper + tol at every saved node value."""
    lo, hi = gf.min_value(), gf.max_value()
    passed = lo >= lower - tolerance and hi <= upper + tolerance
    if not passed:
        logger.warning(f"Discrete maximum principle violated: range [{lo:.3g}, {hi:.3g}] vs [{lower}, {upper}]")
    return MaximumPrincipleReport(passed, lower, upper, lo, hi, tolerance)
