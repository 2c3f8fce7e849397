"""
Shared configuration for the membrane toolkit.

Process settings (logging, ledger, workers) come from environment variables;
run files describe one numerical experiment and are validated by pydantic.
"""

import hashlib
import json
import os

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from membrane.errors import ConfigError
from membrane.model.coefficients import DiffusionSpec, SurfaceField, TabulatedMatrix
from membrane.model.surface import Surface
from membrane.pde.grid import Grid1D
from membrane.potential.tables import PotentialGrid
from membrane.simulate.scheme import SimScheme, SkewMode


@dataclass
class Config:
    """Process configuration."""

    # Logging
    log_level: str = "INFO"
    log_file_path: str = "logs/membrane.log"

    # Run ledger
    database_url: str = "sqlite:///runs/membrane.db"

    # Runs
    output_dir: str = "runs"
    workers: int = 1
    chunk_size: int = 2048

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables."""
        try:
            workers = int(os.getenv("MEMBRANE_WORKERS", "1"))
            chunk_size = int(os.getenv("MEMBRANE_CHUNK_SIZE", "2048"))
        except ValueError as e:
            raise ConfigError(f"MEMBRANE_WORKERS and MEMBRANE_CHUNK_SIZE must be integers ({e})") from e
        if workers < 1 or chunk_size < 1:
            raise ConfigError("MEMBRANE_WORKERS and MEMBRANE_CHUNK_SIZE must be positive")

        return cls(
            # Logging
            log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
            log_file_path=os.getenv("LOG_FILE_PATH", "logs/membrane.log"),

            # Run ledger
            database_url=os.getenv("MEMBRANE_DATABASE_URL", "sqlite:///runs/membrane.db"),

            # Runs
            output_dir=os.getenv("MEMBRANE_OUTPUT_DIR", "runs"),
            workers=workers,
            chunk_size=chunk_size,
        )

    @property
    def ledger_enabled(self) -> bool:
        return bool(self.database_url)


# Global config instance
_config: Optional[Config] = None


def load_config() -> Config:
    """Load and cache the configuration."""
    global _config
    if _config is None:
        _config = Config.from_env()
    return _config


def get_config() -> Config:
    """Get the cached configuration."""
    if _config is None:
        raise RuntimeError("Config not loaded. Call load_config() first.")
    return _config


# ---------------------------------------------------------------------------
# Run files
# ---------------------------------------------------------------------------


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SurfaceBlock(_Block):
    kind: Literal["point", "hyperplane", "sphere"] = "point"
    at: float = 0.0  # point location or hyperplane offset
    normal: Optional[list[float]] = None
    center: Optional[list[float]] = None
    radius: float = 1.0
    quadrature_order: int = Field(32, ge=1)

    @model_validator(mode="after")
    def _geometry(self) -> "SurfaceBlock":
        if self.kind == "hyperplane" and not self.normal:
            raise ValueError("a hyperplane needs `normal`")
        if self.kind == "sphere" and not self.center:
            raise ValueError("a sphere needs `center`")
        return self

    @property
    def dim(self) -> int:
        if self.kind == "hyperplane":
            return len(self.normal)
        if self.kind == "sphere":
            return len(self.center)
        return 1

    def build(self) -> Surface:
        if self.kind == "hyperplane":
            return Surface.hyperplane(self.normal, self.at)
        if self.kind == "sphere":
            return Surface.sphere(self.center, self.radius, self.quadrature_order)
        return Surface.point(self.at)


class TabulatedB(_Block):
    """b(x) = values interpolated linearly between nodes on the line, flat outside."""

    nodes: list[float] = Field(min_length=2)
    values: list[float] = Field(min_length=2)

    @model_validator(mode="after")
    def _table(self) -> "TabulatedB":
        if len(self.nodes) != len(self.values):
            raise ValueError("b.nodes and b.values must have the same length")
        if any(b <= a for a, b in zip(self.nodes[:-1], self.nodes[1:])):
            raise ValueError("b.nodes must be strictly increasing")
        if min(self.values) <= 0:
            raise ValueError("tabulated b must be positive")
        return self

    def build(self) -> TabulatedMatrix:
        return TabulatedMatrix(self.nodes, self.values)


class TabulatedSurface(_Block):
    """A function on a circle given at polar angles in [0, 2 pi), periodic interpolation."""

    angles: list[float] = Field(min_length=1)
    values: list[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _table(self) -> "TabulatedSurface":
        if len(self.angles) != len(self.values):
            raise ValueError("angles and values must have the same length")
        if any(b <= a for a, b in zip(self.angles[:-1], self.angles[1:])):
            raise ValueError("angles must be strictly increasing")
        if self.angles[0] < 0 or self.angles[-1] >= 2 * np.pi:
            raise ValueError("angles must lie in [0, 2 pi)")
        return self

    def build(self, center=(0.0, 0.0)) -> SurfaceField:
        return SurfaceField.tabulated_angle(self.angles, self.values, center)


def _surface_values(value: Union[float, TabulatedSurface]) -> list[float]:
    return value.values if isinstance(value, TabulatedSurface) else [value]


class CoefficientsBlock(_Block):
    # sigma^2, diagonal constants, a matrix, or a table on the line
    b: Union[float, list[float], list[list[float]], TabulatedB] = 1.0
    q: Union[float, TabulatedSurface] = 0.0
    r: Union[float, TabulatedSurface] = 0.0
    C1: float = 1.0
    C2: float = 1.0
    L: float = 0.0
    alpha: float = 1.0

    @model_validator(mode="after")
    def _ranges(self) -> "CoefficientsBlock":
        if any(abs(v) > 1.0 for v in _surface_values(self.q)):
            raise ValueError("q must take values in [-1, 1]")
        if any(v < 0.0 for v in _surface_values(self.r)):
            raise ValueError("r must be non-negative")
        return self

    @property
    def tabulated_surface(self) -> bool:
        return isinstance(self.q, TabulatedSurface) or isinstance(self.r, TabulatedSurface)


class SchemeBlock(_Block):
    dt: float = Field(1e-3, gt=0)
    t_end: float = Field(1.0, gt=0)
    eps: float = Field(0.01, gt=0)
    skew_mode: SkewMode = SkewMode.CROSSING_RESAMPLE
    eps_drift: float = Field(0.01, gt=0)
    bridge_crossing: bool = False
    chunk_size: int = Field(2048, ge=1)
    max_diverged_fraction: float = Field(0.01, ge=0, le=1)
    n_paths: int = Field(10_000, ge=1)
    start: list[float] = Field(default_factory=lambda: [0.0])


class GridsBlock(_Block):
    dx: float = Field(0.02, gt=0)
    x_max: float = Field(6.0, gt=0)
    dt: float = Field(2e-4, gt=0)
    theta: float = Field(0.5, ge=0, le=1)
    membrane_row: Literal["one-sided", "finite-volume"] = "one-sided"
    potential_steps: int = Field(200, ge=2)
    potential_order: int = Field(8, ge=2)
    potential_levels: int = Field(24, ge=1)
    fringe: float = Field(0.01, gt=0)


class BatteryBlock(_Block):
    checkpoints: Optional[list[float]] = None
    caps: list[int] = Field(default_factory=lambda: [1, 2])
    lambdas: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    eps_schedule: list[float] = Field(default_factory=lambda: [0.04, 0.02, 0.01])
    times: list[float] = Field(default_factory=lambda: [1.0])
    phi: Literal["step", "bump"] = "step"
    phi_width: float = Field(0.0, ge=0)
    bump: tuple[float, float] = (0.1, 0.5)
    resolvent_tolerance: float = Field(5e-3, gt=0)
    calibration_seeds: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _bump_order(self) -> "BatteryBlock":
        if not self.bump[1] > self.bump[0] >= 0:
            raise ValueError(f"bump must satisfy 0 <= start < end, got {list(self.bump)}")
        return self


class RunConfig(_Block):
    """One experiment: surface, coefficients, scheme, grids, battery, seed, output directory."""

    surface: SurfaceBlock = Field(default_factory=SurfaceBlock)
    coefficients: CoefficientsBlock = Field(default_factory=CoefficientsBlock)
    scheme: SchemeBlock = Field(default_factory=SchemeBlock)
    grids: GridsBlock = Field(default_factory=GridsBlock)
    battery: BatteryBlock = Field(default_factory=BatteryBlock)
    seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "runs"

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if len(self.scheme.start) != self.surface.dim:
            raise ValueError(f"scheme.start has {len(self.scheme.start)} components, the surface lives in d={self.surface.dim}")
        c = self.coefficients
        if isinstance(c.b, TabulatedB) and self.surface.dim != 1:
            raise ValueError("tabulated b is only defined on the line")
        if c.tabulated_surface and (self.surface.kind != "sphere" or self.surface.dim != 2):
            raise ValueError("tabulated q and r are given by polar angle and need a circle (sphere with d=2)")
        t_end = self.scheme.t_end
        if max(self.battery.times) > t_end or max(self.battery.checkpoints or [0.0]) > t_end:
            raise ValueError(f"battery times and checkpoints must not exceed scheme.t_end = {t_end}")
        return self

    # -- loading ----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid run configuration:\n{e}") from e

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """Read a TOML (any suffix but .json) or JSON run file."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read run file {path}: {e}") from e
        try:
            data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot parse run file {path}: {e}") from e
        return cls.from_dict(data)

    def with_overrides(self, **changes) -> "RunConfig":
        """Apply dotted-key overrides ('scheme.dt': 1e-4) and re-validate."""
        data = self.model_dump(mode="json")
        for key, value in changes.items():
            if value is None:
                continue
            *parents, leaf = key.split(".")
            node = data
            for part in parents:
                node = node[part]
            node[leaf] = value
        return self.from_dict(data)

    def dump(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """SHA-256 over every numerics-affecting input (all but output_dir)."""
        payload = self.model_dump(mode="json", exclude={"output_dir"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    # -- builders ---------------------------------------------------------

    def build_surface(self) -> Surface:
        return self.surface.build()

    def build_spec(self) -> DiffusionSpec:
        c = self.coefficients
        center = self.surface.center or (0.0, 0.0)
        q, r = (v.build(center) if isinstance(v, TabulatedSurface) else v for v in (c.q, c.r))
        b = c.b.build() if isinstance(c.b, TabulatedB) else c.b
        return DiffusionSpec(
            dim=self.surface.dim, b=b, C1=c.C1, C2=c.C2, L=c.L, alpha=c.alpha, q=q, r=r
        )

    def build_scheme(self) -> SimScheme:
        s = self.scheme
        return SimScheme(
            dt=s.dt,
            t_end=s.t_end,
            eps=s.eps,
            skew_mode=s.skew_mode,
            eps_drift=s.eps_drift,
            bridge_crossing=s.bridge_crossing,
            seed=self.seed,
            chunk_size=s.chunk_size,
            max_diverged_fraction=s.max_diverged_fraction,
        )

    def build_start(self) -> np.ndarray:
        return np.asarray(self.scheme.start, dtype=float)

    def build_pde_grid(self, t_end: Optional[float] = None) -> Grid1D:
        g, t_end = self.grids, self.scheme.t_end if t_end is None else t_end
        if self.surface.kind == "sphere":
            return Grid1D.radial(self.surface.radius, g.dx, g.x_max, g.dt, t_end, g.theta, dim=self.surface.dim)
        if self.surface.kind == "hyperplane":
            raise ConfigError("the interface heat solver runs on the line or for spheres only")
        return Grid1D.line(g.dx, g.x_max, g.dt, t_end, g.theta, membrane=self.surface.at)

    def build_potential_grid(self, t_end: Optional[float] = None) -> PotentialGrid:
        g = self.grids
        return PotentialGrid(
            t_end=self.scheme.t_end if t_end is None else t_end,
            n_steps=g.potential_steps,
            order=g.potential_order,
            levels=g.potential_levels,
            fringe=g.fringe,
        )
