"""
Uniform one-dimensional grids for the line and radial reductions.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from membrane.errors import GridError


class Geometry(str, Enum):
    LINE = "line"
    RADIAL = "radial"


@dataclass(frozen=True)
class Grid1D:
    """
    Nodes with the membrane on a node, a time step and the theta weight.

    Line grids cover [a - x_max, a + x_max] around the membrane point a;
    radial grids cover rho in [0, x_max] with the membrane at rho = R.
    Homogeneous Neumann holds at the far end(s).
    """

    nodes: np.ndarray
    membrane_index: int
    dt: float
    t_end: float
    theta: float = 0.5
    geometry: Geometry = Geometry.LINE
    dim: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or len(nodes) < 5:
            raise GridError("a grid needs at least five nodes")
        steps = np.diff(nodes)
        if np.any(steps <= 0):
            raise GridError("grid nodes must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise GridError("grid nodes must be uniformly spaced")
        if not self.dt > 0 or not self.t_end > 0:
            raise GridError("dt and t_end must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise GridError(f"theta must lie in [0, 1], got {self.theta}")
        m = self.membrane_index
        if not 2 <= m <= len(nodes) - 3:
            raise GridError("the membrane node needs two grid nodes on each side")

    @classmethod
    def line(
        cls,
        dx: float,
        x_max: float,
        dt: float,
        t_end: float,
        theta: float = 0.5,
        membrane: float = 0.0,
    ) -> "Grid1D":
        n = int(round(x_max / dx))
        nodes = membrane + dx * np.arange(-n, n + 1)
        return cls(nodes=nodes, membrane_index=n, dt=dt, t_end=t_end, theta=theta)

    @classmethod
    def radial(
        cls,
        radius: float,
        dx: float,
        x_max: float,
        dt: float,
        t_end: float,
        theta: float = 0.5,
        dim: int = 2,
    ) -> "Grid1D":
        # Snap the spacing so that rho = R is a node.
        m = max(2, int(round(radius / dx)))
        h = radius / m
        n = int(round(x_max / h))
        if n <= m + 2:
            raise GridError("x_max must exceed the membrane radius by at least three cells")
        return cls(
            nodes=h * np.arange(n + 1),
            membrane_index=m,
            dt=dt,
            t_end=t_end,
            theta=theta,
            geometry=Geometry.RADIAL,
            dim=dim,
        )

    @property
    def h(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    @property
    def membrane(self) -> float:
        return float(self.nodes[self.membrane_index])

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    @property
    def x_max(self) -> float:
        if self.geometry is Geometry.RADIAL:
            return float(self.nodes[-1])
        return float(self.nodes[-1] - self.membrane)

    def refined(self, factor: int = 2, time_factor: Optional[int] = None) -> "Grid1D":
        """Grid with the spacing divided by factor and dt by time_factor (default factor)."""
        time_factor = factor if time_factor is None else time_factor
        h = self.h / factor
        if self.geometry is Geometry.RADIAL:
            return Grid1D.radial(self.membrane, h, self.x_max, self.dt / time_factor, self.t_end, self.theta, self.dim)
        return Grid1D.line(h, self.x_max, self.dt / time_factor, self.t_end, self.theta, self.membrane)

    def describe(self) -> dict:
        return {
            "geometry": self.geometry.value,
            "h": self.h,
            "x_max": self.x_max,
            "membrane": self.membrane,
            "n_nodes": len(self.nodes),
            "dt": self.dt,
            "t_end": self.t_end,
            "theta": self.theta,
            "dim": self.dim,
        }
