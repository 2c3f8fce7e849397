"""
Geometry of the membrane surface S.

Only surfaces with closed-form distance, normal and projection are admitted:
a point on the line, a hyperplane and a sphere. The hyperplane is unbounded,
which the closed-surface setting does not allow; it is kept because it is the
classical testbed, and it has no surface quadrature.

Sign convention: the signed distance is negative in the interior domain,
positive in the exterior one, and the normal points outward (towards the
exterior). For a point membrane on the line the interior is x < a.
"""

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

import numpy as np

from membrane.errors import SurfaceError

ON_TOLERANCE = 1e-12


class SurfaceKind(str, Enum):
    POINT = "point"
    HYPERPLANE = "hyperplane"
    SPHERE = "sphere"


class Side(IntEnum):
    INTERIOR = -1
    ON = 0
    EXTERIOR = 1


@dataclass(frozen=True)
class Quadrature:
    """Surface quadrature for integrals against d(sigma)."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    # Size of the patch each node stands for (length in d=2, area in d=3, 0 for a point).
    patch: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def area(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class Surface:
    """
    The membrane S dividing R^d into D^i and D^e.

    Build instances with the `point`, `hyperplane` and `sphere` constructors.
    """

    kind: SurfaceKind
    dim: int
    normal_vector: Optional[tuple[float, ...]] = None
    offset: float = 0.0
    center: Optional[tuple[float, ...]] = None
    radius: float = 0.0
    quadrature_order: int = 16
    _quadrature: Optional[Quadrature] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise SurfaceError(f"dimension must be >= 1, got {self.dim}")
        if self.quadrature_order < 1:
            raise SurfaceError("quadrature_order must be >= 1")
        if self.kind is SurfaceKind.POINT and self.dim != 1:
            raise SurfaceError("a point membrane lives on the line (dim=1)")
        if self.kind is SurfaceKind.HYPERPLANE:
            n = np.asarray(self.normal_vector, dtype=float)
            if n.shape != (self.dim,):
                raise SurfaceError(f"normal must have {self.dim} components")
            if abs(np.linalg.norm(n) - 1.0) > 1e-12:
                raise SurfaceError("hyperplane normal must have unit Euclidean norm")
        if self.kind is SurfaceKind.SPHERE:
            if not self.radius > 0:
                raise SurfaceError("sphere radius must be positive")
            if len(self.center) != self.dim:
                raise SurfaceError(f"center must have {self.dim} components")

    # -- constructors -----------------------------------------------------

    @classmethod
    def point(cls, at: float = 0.0) -> "Surface":
        return cls(kind=SurfaceKind.POINT, dim=1, offset=float(at), quadrature_order=1)

    @classmethod
    def hyperplane(cls, normal, offset: float = 0.0) -> "Surface":
        n = tuple(float(v) for v in np.atleast_1d(normal))
        return cls(kind=SurfaceKind.HYPERPLANE, dim=len(n), normal_vector=n, offset=float(offset))

    @classmethod
    def sphere(cls, center, radius: float, quadrature_order: int = 32) -> "Surface":
        c = tuple(float(v) for v in np.atleast_1d(center))
        return cls(
            kind=SurfaceKind.SPHERE,
            dim=len(c),
            center=c,
            radius=float(radius),
            quadrature_order=quadrature_order,
        )

    # -- geometry ---------------------------------------------------------

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise SurfaceError(f"expected points with {self.dim} coordinates, got shape {x.shape}")
        return x

    def signed_distance(self, x) -> np.ndarray:
        """Signed distance to S: negative inside, positive outside."""
        x = self._as_points(x)
        if self.kind is SurfaceKind.POINT:
            return x[..., 0] - self.offset
        if self.kind is SurfaceKind.HYPERPLANE:
            return x @ np.asarray(self.normal_vector) - self.offset
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def unsigned_distance(self, x) -> np.ndarray:
        """d(x, S), the function phi."""
        return np.abs(self.signed_distance(x))

    def side(self, x, tolerance: float = 0.0):
        """
        Classify points against S.

        With the default tolerance a point is ON only when its distance is an
        exact floating zero; external inputs should pass ON_TOLERANCE, which is
        scaled by (1 + |x|).
        """
        x = self._as_points(x)
        sd = self.signed_distance(x)
        band = tolerance * (1.0 + np.linalg.norm(x, axis=-1))
        out = np.where(np.abs(sd) <= band, Side.ON, np.where(sd < 0, Side.INTERIOR, Side.EXTERIOR))
        if out.ndim == 0:
            return Side(int(out))
        return out

    def project(self, x) -> np.ndarray:
        """Nearest point of S."""
        x = self._as_points(x)
        if self.kind is SurfaceKind.POINT:
            return np.full_like(x, self.offset)
        if self.kind is SurfaceKind.HYPERPLANE:
            n = np.asarray(self.normal_vector)
            return x - self.signed_distance(x)[..., None] * n
        c = np.asarray(self.center)
        rel = x - c
        rho = np.linalg.norm(rel, axis=-1, keepdims=True)
        # The center is equidistant from all of S; pick the first axis direction.
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        direction = np.where(rho > 0, rel / np.where(rho > 0, rho, 1.0), e1)
        return c + self.radius * direction

    def normal(self, x, tolerance: float = ON_TOLERANCE) -> np.ndarray:
        """Outward unit normal at surface points; raises for points off S."""
        x = self._as_points(x)
        band = tolerance * (1.0 + np.linalg.norm(x, axis=-1))
        if np.any(self.unsigned_distance(x) > band):
            raise SurfaceError("normal requested at a point off the surface; project it first")
        return self.outward_direction(x)

    def outward_direction(self, x) -> np.ndarray:
        """The normal of the nearest surface point, defined everywhere."""
        x = self._as_points(x)
        if self.kind is SurfaceKind.POINT:
            return np.ones_like(x)
        if self.kind is SurfaceKind.HYPERPLANE:
            return np.broadcast_to(np.asarray(self.normal_vector), x.shape).copy()
        p = self.project(x)
        return (p - np.asarray(self.center)) / self.radius

    def mean_curvature_term(self, x) -> np.ndarray:
        """(d-1)/rho for spheres, zero for flat kinds; the Laplacian of phi off S up to sign."""
        x = self._as_points(x)
        if self.kind is not SurfaceKind.SPHERE:
            return np.zeros(x.shape[:-1])
        rho = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return (self.dim - 1) / np.maximum(rho, 1e-300)

    def reflect_to(self, x, signed: np.ndarray) -> np.ndarray:
        """Move points along the normal so that their signed distance becomes `signed`."""
        x = self._as_points(x)
        if self.kind is SurfaceKind.SPHERE:
            c = np.asarray(self.center)
            direction = self.outward_direction(x)
            rho = np.maximum(self.radius + signed, 0.0)
            return c + rho[..., None] * direction
        shift = signed - self.signed_distance(x)
        return x + shift[..., None] * self.outward_direction(x)

    # -- quadrature -------------------------------------------------------

    def quadrature(self) -> Quadrature:
        """Nodes and positive weights for surface integrals, summing to the area."""
        if self._quadrature is not None:
            return self._quadrature
        quad = self._build_quadrature()
        object.__setattr__(self, "_quadrature", quad)
        return quad

    def _build_quadrature(self) -> Quadrature:
        if self.kind is SurfaceKind.POINT:
            pts = np.array([[self.offset]])
            return Quadrature(pts, np.ones(1), np.ones((1, 1)), np.zeros(1))
        if self.kind is SurfaceKind.HYPERPLANE:
            raise SurfaceError("a hyperplane has infinite area and no surface quadrature")
        c = np.asarray(self.center)
        n = self.quadrature_order
        if self.dim == 2:
            angles = 2.0 * math.pi * np.arange(n) / n
            normals = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
            weights = np.full(n, 2.0 * math.pi * self.radius / n)
            return Quadrature(c + self.radius * normals, weights, normals, weights.copy())
        if self.dim == 3:
            mu, w_mu = np.polynomial.legendre.leggauss(n)
            phis = 2.0 * math.pi * np.arange(2 * n) / (2 * n)
            s = np.sqrt(1.0 - mu**2)
            normals = np.stack(
                [
                    np.outer(s, np.cos(phis)),
                    np.outer(s, np.sin(phis)),
                    np.outer(mu, np.ones_like(phis)),
                ],
                axis=-1,
            ).reshape(-1, 3)
            weights = (np.outer(w_mu, np.full(2 * n, math.pi / n)) * self.radius**2).ravel()
            return Quadrature(c + self.radius * normals, weights, normals, weights.copy())
        raise SurfaceError(f"no surface quadrature for spheres in dimension {self.dim}")

    @property
    def area(self) -> float:
        return self.quadrature().area
