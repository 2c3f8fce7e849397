"""
Helpers shared by the commands.
"""

from typing import Optional

import numpy as np

from membrane.errors import ConfigError, MembraneError
from membrane.model.surface import SurfaceKind
from membrane.model.test_functions import TestFunction, erf_step, gaussian_bump
from membrane.potential.kernels import SurfaceNodes
from membrane.verify.consistency import neutral_membrane
from shared import RunConfig


def build_phi(config: RunConfig):
    """Initial data for the PDE and consistency routes: 1{x > 0} (erf-smoothed) or a Gaussian bump."""
    battery, surface = config.battery, config.surface
    if battery.phi == "step":
        if surface.dim != 1:
            raise ConfigError("phi = 'step' is only defined on the line; use 'bump'")
        return erf_step(battery.phi_width)
    center = surface.center if surface.kind == "sphere" else [0.0] * surface.dim
    return gaussian_bump(surface.dim, center=center, width=battery.phi_width or 1.0, name="phi")


def phi_values(phi, points: np.ndarray) -> np.ndarray:
    if isinstance(phi, TestFunction):
        return np.asarray(phi.value(0.0, points), dtype=float)
    return np.asarray(phi(points), dtype=float).reshape(points.shape[:-1])


def null_membrane(ctx) -> Optional[float]:
    """sigma^2 when the membrane is invisible (point, constant isotropic b, q = r = 0), else None."""
    spec = ctx.spec
    if ctx.surface.kind is not SurfaceKind.POINT or not spec.is_constant:
        return None
    if not neutral_membrane(spec):
        return None
    return spec.isotropic_variance()


def potential_supported(ctx) -> bool:
    """Layer potentials need a point or sphere membrane and constant isotropic b."""
    try:
        SurfaceNodes.from_surface(ctx.spec, ctx.surface)
    except MembraneError:
        return False
    return True


def on_surface(ctx, tolerance: float = 1e-12) -> bool:
    return bool(ctx.surface.unsigned_distance(ctx.start[None, :])[0] <= tolerance)


def checkpoints(ctx) -> list[float]:
    if ctx.config.battery.checkpoints:
        return list(ctx.config.battery.checkpoints)
    return [float(t) for t in np.linspace(0.0, ctx.scheme.t_end, 5)[1:]]
