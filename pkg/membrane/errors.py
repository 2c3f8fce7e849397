"""
Exception hierarchy for the membrane toolkit.
"""

from typing import Optional


class MembraneError(Exception):
    """Base class for every error raised by the toolkit."""


class SurfaceError(MembraneError, ValueError):
    """A point is off the membrane, or the surface kind cannot do what was asked."""


class CoefficientError(MembraneError, ValueError):
    """Invalid diffusion matrix or membrane functions."""


class SchemeError(MembraneError, ValueError):
    """Invalid simulation scheme or an unusable simulation outcome."""


class GridError(MembraneError, ValueError):
    """A PDE grid was refused."""

    def __init__(self, message: str, suggested_dt: Optional[float] = None) -> None:
        super().__init__(message)
        self.suggested_dt = suggested_dt


class SupportError(MembraneError, ValueError):
    """Data that must have compact support in time does not."""


class TestFunctionError(MembraneError, ValueError):
    """A test function lacks derivatives or violates a surface inequality."""

    __test__ = False  # not a pytest class


class ConfigError(MembraneError, ValueError):
    """Run configuration could not be validated."""
