"""
Time grids and tabulated kernels for the potential solvers.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from membrane.errors import GridError

SINGULAR_ENDPOINT = "t^-1/2 endpoint, graded product integration"


@dataclass(frozen=True)
class PotentialGrid:
    """
    Uniform time grid t_n = n * t_end / n_steps with the quadrature settings
    shared by every Volterra march. `fringe` is the smallest normal offset used
    for one-sided limits and derivatives at S.
    """

    t_end: float
    n_steps: int
    order: int = 8
    levels: int = 24
    fringe: float = 0.01

    def __post_init__(self) -> None:
        if self.t_end <= 0:
            raise GridError(f"t_end must be positive, got {self.t_end}")
        if self.n_steps < 2:
            raise GridError("a potential grid needs at least two time steps")
        if self.order < 2 or self.levels < 1:
            raise GridError("quadrature order >= 2 and at least one grading level are required")
        if self.fringe <= 0:
            raise GridError("fringe offset must be positive")

    @property
    def delta(self) -> float:
        return self.t_end / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def refined(self, factor: int = 2) -> "PotentialGrid":
        return PotentialGrid(self.t_end, self.n_steps * factor, self.order, self.levels, self.fringe)

    def describe(self) -> dict:
        return {
            "t_end": self.t_end,
            "n_steps": self.n_steps,
            "delta": self.delta,
            "order": self.order,
            "levels": self.levels,
            "fringe": self.fringe,
        }


@dataclass
class KernelTable:
    """
    Values K(t_n, x_p, y_m) on the time grid for source points x_p and target
    points y_m. Row n = 0 holds the zero extension off the diagonal.
    """

    name: str
    times: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    values: np.ndarray
    singularity: str = SINGULAR_ENDPOINT
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise GridError(f"{self.name}: non-finite kernel values; refine the time grid")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def time_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def at(self, t: float, source: Optional[int] = None) -> np.ndarray:
        """Values at the grid time nearest t, for one source or all."""
        row = self.values[self.time_index(t)]
        return row if source is None else row[source]

    def sup_difference(self, other: "KernelTable", start: int = 1) -> float:
        """max |self - other| over rows n >= start."""
        if self.values.shape != other.values.shape:
            raise GridError(f"cannot compare tables of shape {self.shape} and {other.shape}")
        if start >= len(self.times):
            return 0.0
        return float(np.max(np.abs(self.values[start:] - other.values[start:])))

    def with_values(self, name: str, values: np.ndarray, **meta) -> "KernelTable":
        return KernelTable(name, self.times, self.sources, self.targets, values, self.singularity, {**self.meta, **meta})

    def write_csv(self, path: Path, every: int = 1) -> Path:
        """Rows (t, x_1..x_d, y_1..y_d, value), time-major."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        dim = self.sources.shape[-1]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *[f"x_{i + 1}" for i in range(dim)], *[f"y_{i + 1}" for i in range(dim)], "value"])
            for n in range(0, len(self.times), every):
                for p, x in enumerate(self.sources):
                    for m, y in enumerate(self.targets):
                        writer.writerow(
                            [f"{self.times[n]:.10g}", *[f"{v:.10g}" for v in x], *[f"{v:.10g}" for v in y],
                             f"{self.values[n, p, m]:.14g}"]
                        )
        return path
