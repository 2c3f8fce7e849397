"""
Problem coefficients: the diffusion matrix field b(x) with its J-constants and
the membrane functions q (skewness) and r (delay density).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import linalg

from membrane.errors import CoefficientError
from membrane.model.surface import Surface

MatrixField = Callable[[np.ndarray], np.ndarray]


class ConstantMatrix:
    """b(x) = B for a fixed symmetric matrix."""

    def __init__(self, matrix) -> None:
        b = np.atleast_2d(np.asarray(matrix, dtype=float))
        if b.shape[0] != b.shape[1]:
            raise CoefficientError(f"diffusion matrix must be square, got {b.shape}")
        self.matrix = b
        self.dim = b.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape)

    @property
    def is_constant(self) -> bool:
        return True


class FieldMatrix:
    """b(x) given by a callable mapping points (..., d) to matrices (..., d, d)."""

    def __init__(self, fn: MatrixField, dim: int) -> None:
        self.fn = fn
        self.dim = dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    @property
    def is_constant(self) -> bool:
        return False


class TabulatedMatrix(FieldMatrix):
    """One-dimensional b(x) tabulated on a grid, linearly interpolated, flat outside."""

    def __init__(self, nodes, values) -> None:
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or np.any(np.diff(nodes) <= 0):
            raise CoefficientError("tabulated b needs strictly increasing nodes and matching values")
        self.nodes = nodes
        self.values = values
        super().__init__(self._interpolate, dim=1)

    def _interpolate(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x[..., 0], self.nodes, self.values)[..., None, None]


class SurfaceField:
    """A real function on S: a constant or a callable of surface points."""

    def __init__(self, value: Union[float, Callable[[np.ndarray], np.ndarray]]) -> None:
        self._constant: Optional[float] = None
        self._fn = None
        if callable(value):
            self._fn = value
        else:
            self._constant = float(value)

    @classmethod
    def tabulated_angle(cls, angles, values, center=(0.0, 0.0)) -> "SurfaceField":
        """Function on a circle given at polar angles about `center`, periodic linear interpolation."""
        angles = np.asarray(angles, dtype=float)
        values = np.asarray(values, dtype=float)
        cx, cy = (float(c) for c in center)

        def fn(points: np.ndarray) -> np.ndarray:
            theta = np.mod(np.arctan2(points[..., 1] - cy, points[..., 0] - cx), 2.0 * np.pi)
            return np.interp(theta, angles, values, period=2.0 * np.pi)

        return cls(fn)

    @property
    def is_constant(self) -> bool:
        return self._constant is not None

    @property
    def constant(self) -> float:
        if self._constant is None:
            raise CoefficientError("surface field is not constant")
        return self._constant

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self._constant is not None:
            return np.full(points.shape[:-1], self._constant)
        return np.asarray(self._fn(points), dtype=float)

    def __repr__(self) -> str:
        if self._constant is not None:
            return f"SurfaceField({self._constant})"
        return f"SurfaceField({getattr(self._fn, '__name__', 'callable')})"


def _as_matrix_field(b, dim: int):
    if isinstance(b, (ConstantMatrix, FieldMatrix)):
        return b
    if callable(b):
        return FieldMatrix(b, dim)
    arr = np.asarray(b, dtype=float)
    if arr.ndim == 0:
        return ConstantMatrix(float(arr) * np.eye(dim))
    if arr.ndim == 1:
        return ConstantMatrix(np.diag(arr))
    return ConstantMatrix(arr)


def _as_surface_field(value) -> SurfaceField:
    return value if isinstance(value, SurfaceField) else SurfaceField(value)


@dataclass(frozen=True)
class DiffusionSpec:
    """
    b(x) with conditions J (C1, C2, L, alpha), and q: S -> [-1, 1], r: S -> [0, inf).

    `b` may be a scalar (sigma^2 I), a vector (diagonal constants), a matrix, a
    callable of points or one of the matrix classes above.
    """

    dim: int
    b: object = 1.0
    C1: float = 1.0
    C2: float = 1.0
    L: float = 0.0
    alpha: float = 1.0
    q: object = 0.0
    r: object = 0.0
    _field: object = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise CoefficientError(f"Hoelder exponent must lie in (0, 1], got {self.alpha}")
        if not 0 < self.C1 <= self.C2:
            raise CoefficientError("ellipticity bounds need 0 < C1 <= C2")
        if self.L < 0:
            raise CoefficientError("Hoelder constant must be non-negative")
        matrix_field = _as_matrix_field(self.b, self.dim)
        if matrix_field.dim != self.dim:
            raise CoefficientError(f"b has dimension {matrix_field.dim}, spec has {self.dim}")
        object.__setattr__(self, "_field", matrix_field)
        object.__setattr__(self, "q", _as_surface_field(self.q))
        object.__setattr__(self, "r", _as_surface_field(self.r))

    # -- diffusion matrix -------------------------------------------------

    @property
    def matrix_field(self):
        return self._field

    @property
    def is_constant(self) -> bool:
        return self._field.is_constant

    def b_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return self._field(x)

    def constant_matrix(self) -> np.ndarray:
        if not self.is_constant:
            raise CoefficientError("a constant diffusion matrix is required here")
        return self._field.matrix

    def isotropic_variance(self) -> float:
        """sigma^2 when b = sigma^2 I; raises otherwise."""
        b = self.constant_matrix()
        sigma2 = float(b[0, 0])
        if not np.allclose(b, sigma2 * np.eye(self.dim), rtol=1e-12, atol=0.0):
            raise CoefficientError("an isotropic diffusion matrix sigma^2 I is required here")
        return sigma2

    def sqrt_b(self, x) -> np.ndarray:
        """Symmetric square root of b(x) via eigendecomposition."""
        b = self.b_at(x)
        if self.is_constant:
            w, v = linalg.eigh(self.constant_matrix())
            root = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
            return np.broadcast_to(root, b.shape)
        w, v = np.linalg.eigh(b)
        return np.einsum("...ij,...j,...kj->...ik", v, np.sqrt(np.maximum(w, 0.0)), v)

    # -- surface quantities -----------------------------------------------

    def conormal(self, x, surface: Surface) -> tuple[np.ndarray, np.ndarray]:
        """(nu, N) at surface points, with N = b(x) nu(x)."""
        nu = surface.normal(x)
        big_n = np.einsum("...ij,...j->...i", self.b_at(surface._as_points(x)), nu)
        return nu, big_n

    def normal_variance(self, x, surface: Surface) -> np.ndarray:
        """(b(x) nu, nu): the factor turning d/d nu into d/dN."""
        pts = surface._as_points(x)
        nu = surface.outward_direction(pts)
        return np.einsum("...i,...ij,...j->...", nu, self.b_at(pts), nu)

    def skew_ratio(self, points) -> np.ndarray:
        """A = q / r, defined only where r > 0."""
        r = self.r(points)
        if np.any(r <= 0):
            raise CoefficientError("A = q/r is only defined where r > 0")
        return self.q(points) / r


def normal_and_conormal(x, spec: DiffusionSpec, surface: Surface) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normal nu and co-normal N = b(x) nu at points of S."""
    return spec.conormal(x, surface)
