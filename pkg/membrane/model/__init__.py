"""Surfaces, coefficients and test functions."""

from .coefficients import (
    ConstantMatrix,
    DiffusionSpec,
    FieldMatrix,
    SurfaceField,
    TabulatedMatrix,
    normal_and_conormal,
)
from .conditions import JReport, Witness, validate_conditions_J
from .surface import ON_TOLERANCE, Quadrature, Side, Surface, SurfaceKind
from .test_functions import (
    CappedDistance,
    GridTestFunction,
    PolynomialFunction,
    SmoothSpatialFunction,
    TestFunction,
    TimeBump,
    TimeFactor,
    cap_profile,
    capped_distance,
    erf_step,
    gaussian_bump,
    smoothstep5,
)

__all__ = [
    "ConstantMatrix",
    "DiffusionSpec",
    "FieldMatrix",
    "SurfaceField",
    "TabulatedMatrix",
    "normal_and_conormal",
    "JReport",
    "Witness",
    "validate_conditions_J",
    "ON_TOLERANCE",
    "Quadrature",
    "Side",
    "Surface",
    "SurfaceKind",
    "CappedDistance",
    "GridTestFunction",
    "PolynomialFunction",
    "SmoothSpatialFunction",
    "TestFunction",
    "TimeBump",
    "TimeFactor",
    "cap_profile",
    "capped_distance",
    "erf_step",
    "gaussian_bump",
    "smoothstep5",
]
