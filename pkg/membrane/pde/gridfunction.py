"""
Tabulated solutions u(t_k, x_j) on a Grid1D.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from membrane.model.test_functions import GridTestFunction
from membrane.pde.grid import Geometry, Grid1D


def one_sided_derivatives(values: np.ndarray, m: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Second-order three-point derivatives d/d nu at node m from the exterior
    (increasing coordinate) and interior side, along the last axis.
    """
    plus = (-3.0 * values[..., m] + 4.0 * values[..., m + 1] - values[..., m + 2]) / (2.0 * h)
    minus = (3.0 * values[..., m] - 4.0 * values[..., m - 1] + values[..., m - 2]) / (2.0 * h)
    return plus, minus


@dataclass
class GridFunction:
    """
    Values u(t_k, x_j) with the grid and a snapshot of the coefficients.

    For line geometry x_j are coordinates, for radial geometry distances from
    `center`. `zero_after` marks an extension by zero for t beyond it.
    """

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray
    center: Optional[np.ndarray] = None
    zero_after: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def geometry(self) -> Geometry:
        return self.grid.geometry

    @property
    def membrane_index(self) -> int:
        return self.grid.membrane_index

    def time_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def at(self, t: float, s) -> np.ndarray:
        """
        Value at the saved time nearest t and grid coordinate s (the distance
        from the center for radial grids), linear in space and exact at nodes.
        """
        s = np.asarray(s, dtype=float)
        if self.zero_after is not None and t >= self.zero_after:
            return np.zeros_like(s)
        return np.interp(s, self.nodes, self.values[self.time_index(t)])

    def at_points(self, t: float, x) -> np.ndarray:
        """Value at points of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        if self.geometry is Geometry.RADIAL:
            center = self.center if self.center is not None else np.zeros(self.grid.dim)
            return self.at(t, np.linalg.norm(x - center, axis=-1))
        return self.at(t, x[..., 0])

    def membrane_trace(self) -> np.ndarray:
        return self.values[:, self.membrane_index]

    def one_sided_normal_derivatives(self) -> tuple[np.ndarray, np.ndarray]:
        """d u / d nu at the membrane from outside and inside, per saved time."""
        return one_sided_derivatives(self.values, self.membrane_index, self.grid.h)

    def max_value(self) -> float:
        return float(self.values.max())

    def min_value(self) -> float:
        return float(self.values.min())

    def as_test_function(self, name: str = "grid") -> GridTestFunction:
        center = None
        membrane = self.grid.membrane
        if self.geometry is Geometry.RADIAL:
            center = self.center if self.center is not None else np.zeros(self.grid.dim)
        return GridTestFunction(
            self.times,
            self.nodes,
            self.values,
            membrane=membrane,
            center=center,
            dim=self.grid.dim,
            name=name,
        )

    def mass(self, delay: float = 0.0) -> np.ndarray:
        """Trapezoid mass per saved time on a line grid, plus delay * u at the membrane."""
        w = np.full(len(self.nodes), self.grid.h)
        w[0] = w[-1] = 0.5 * self.grid.h
        return self.values @ w + delay * self.membrane_trace()

    def write_csv(self, path: Path, every: int = 1) -> Path:
        """Rows (t, x, u), time-major."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "u"])
            for k in range(0, len(self.times), every):
                t = self.times[k]
                for x, u in zip(self.nodes, self.values[k]):
                    writer.writerow([f"{t:.10g}", f"{x:.10g}", f"{u:.14g}"])
        return path
