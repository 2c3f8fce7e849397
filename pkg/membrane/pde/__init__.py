"""Finite differences for the interface heat problem and the extension Hh."""

from .grid import Geometry, Grid1D
from .gridfunction import GridFunction, one_sided_derivatives
from .operators import (
    MaximumPrincipleReport,
    SurfaceTable,
    evaluate_K,
    evaluate_Ktilde,
    maximum_principle_audit,
)
from .solver import MembraneRow, boundary_support, solve_extension_Hh, solve_interface_heat

__all__ = [
    "Geometry",
    "Grid1D",
    "GridFunction",
    "one_sided_derivatives",
    "MaximumPrincipleReport",
    "SurfaceTable",
    "evaluate_K",
    "evaluate_Ktilde",
    "maximum_principle_audit",
    "MembraneRow",
    "boundary_support",
    "solve_extension_Hh",
    "solve_interface_heat",
]
