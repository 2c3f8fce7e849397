"""
The fundamental solution g0 of the constant-coefficient operator and its
surface-weighted forms.

Surface integrals are node sums with the surface quadrature weights. A point
lying on the normal line through a node, close to S, gets the node's own
patch integrated in closed form (flat patch: a segment of the circle, a disc
on the sphere) instead of the point value, which is what keeps the weakly
singular layers integrable at the node.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf

from membrane.errors import CoefficientError, SurfaceError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface, SurfaceKind

logger = logging.getLogger(__name__)

# Points at most this fraction of the radius off a sphere are attached to a node.
ATTACH_FRACTION = 0.25


def g0(t, x, y, spec: DiffusionSpec) -> np.ndarray:
    """
    Gaussian kernel of 1/2 sum b_ij d_i d_j for constant b:
    (2 pi t)^(-d/2) det(b)^(-1/2) exp(-(y-x)' b^-1 (y-x) / (2t)); zero for t <= 0.
    """
    b = spec.constant_matrix()
    d = spec.dim
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if d == 1:
        x = x if x.ndim and x.shape[-1] == 1 else x[..., None]
        y = y if y.ndim and y.shape[-1] == 1 else y[..., None]
    diff = y - x
    quad = np.einsum("...i,ij,...j->...", diff, np.linalg.inv(b), diff)
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    value = (2.0 * math.pi * safe) ** (-0.5 * d) / math.sqrt(np.linalg.det(b)) * np.exp(-quad / (2.0 * safe))
    return np.where(t > 0, value, 0.0)


def conormal_g0(s, z, y, normal, spec: DiffusionSpec) -> np.ndarray:
    """d g0(s, z, y) / d N(z) with N = b nu: nu . (y - z) / s * g0."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    proj = np.einsum("...i,...i->...", np.asarray(normal, dtype=float), y - z)
    return proj / np.where(s > 0, s, 1.0) * g0(s, z, y, spec)


@dataclass(frozen=True)
class SurfaceNodes:
    """
    Quadrature nodes of S with the membrane constants and the isotropic
    variance sigma^2 the layer kernels need.
    """

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    half_width: np.ndarray
    curvature: float
    sigma2: float
    q: np.ndarray
    r: np.ndarray
    center: Optional[np.ndarray] = None
    radius: float = 0.0

    @classmethod
    def from_surface(cls, spec: DiffusionSpec, surface: Surface) -> "SurfaceNodes":
        if surface.kind is SurfaceKind.HYPERPLANE:
            raise SurfaceError("layer potentials need a closed surface: a point on the line or a sphere")
        if surface.dim != spec.dim:
            raise SurfaceError(f"surface lives in dimension {surface.dim}, coefficients in {spec.dim}")
        if not spec.is_constant:
            raise CoefficientError("layer potentials need a constant diffusion matrix (closed-form g0)")
        sigma2 = spec.isotropic_variance()
        quad = surface.quadrature()
        if surface.kind is SurfaceKind.POINT:
            half_width = np.zeros(1)
            curvature, center, radius = 0.0, None, 0.0
        elif surface.dim == 2:
            half_width = 0.5 * quad.patch
            curvature, center, radius = 1.0 / surface.radius, np.asarray(surface.center), surface.radius
        else:
            half_width = np.sqrt(quad.patch / math.pi)
            curvature, center, radius = 1.0 / surface.radius, np.asarray(surface.center), surface.radius
        return cls(
            points=quad.points,
            weights=quad.weights,
            normals=quad.normals,
            half_width=half_width,
            curvature=curvature,
            sigma2=sigma2,
            q=np.asarray(spec.q(quad.points), dtype=float).reshape(-1),
            r=np.asarray(spec.r(quad.points), dtype=float).reshape(-1),
            center=center,
            radius=radius,
        )

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[-1]

    def offset_points(self, offset: float) -> np.ndarray:
        """Nodes moved by `offset` along the outward normal."""
        return self.points + offset * self.normals

    def attach(self, x) -> tuple[np.ndarray, np.ndarray]:
        """
        For each point, the node whose normal line it lies on (or -1) and the
        signed offset along that normal.
        """
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        if self.center is None:
            return np.zeros(len(x), dtype=int), x[:, 0] - self.points[0, 0]
        rel = x - self.center
        dist = np.linalg.norm(rel, axis=-1)
        offset = dist - self.radius
        nearest = np.argmax(rel @ self.normals.T, axis=-1)
        foot = self.center + np.outer(dist, np.ones(self.dim)) * self.normals[nearest]
        on_line = np.linalg.norm(x - foot, axis=-1) <= 1e-9 * (1.0 + self.radius)
        attached = on_line & (np.abs(offset) <= ATTACH_FRACTION * self.radius) & (dist > 0)
        return np.where(attached, nearest, -1), np.where(attached, offset, 0.0)

    # -- closed-form patch integrals, c = 2 sigma^2 s ------------------------

    def _tangential(self, s: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Zeroth and second moments of the tangential Gaussian over the flat patch."""
        c = 2.0 * self.sigma2 * s
        if self.dim == 1:
            return np.ones_like(c * a), np.zeros_like(c * a)
        ratio = a * a / c
        if self.dim == 2:
            root = np.sqrt(c)
            t0 = erf(a / root)
            t2 = 0.5 * c * (t0 - 2.0 * a * np.exp(-ratio) / (math.sqrt(math.pi) * root))
            return t0, t2
        e = np.exp(-ratio)
        return 1.0 - e, c * (1.0 - (1.0 + ratio) * e)

    def patch_g0(self, s, offset, node) -> np.ndarray:
        """int over the node's patch of g0(s, x, z) d sigma_z, x at `offset` on its normal."""
        s = np.asarray(s, dtype=float)
        c = 2.0 * self.sigma2 * s
        t0, _ = self._tangential(s, self.half_width[node])
        return (math.pi * c) ** -0.5 * np.exp(-offset * offset / c) * t0

    def patch_conormal(self, s, offset, node) -> np.ndarray:
        """int over the node's patch of d g0(s, z, y)/d N(z) d sigma_z, y at `offset` on its normal."""
        s = np.asarray(s, dtype=float)
        c = 2.0 * self.sigma2 * s
        t0, t2 = self._tangential(s, self.half_width[node])
        kappa = self.curvature
        normal = (math.pi * c) ** -0.5 * np.exp(-offset * offset / c) / s
        return normal * (offset * t0 - 0.5 * kappa * (1.0 + offset * kappa) * t2)

    # -- weighted kernels at lags s (Q,) ------------------------------------

    def _g0_iso(self, s: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d2 = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=-1)
        c = 2.0 * self.sigma2 * s[:, None, None]
        return (math.pi * c) ** (-0.5 * self.dim) * np.exp(-d2[None] / c)

    def single_layer(self, s, sources) -> np.ndarray:
        """w_k g0(s, x_p, z_k) as (Q, P, M), patch-integrated where x_p is attached to z_k."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        sources = np.asarray(sources, dtype=float).reshape(-1, self.dim)
        values = self._g0_iso(s, sources, self.points) * self.weights
        node, offset = self.attach(sources)
        for p in np.flatnonzero(node >= 0):
            values[:, p, node[p]] = self.patch_g0(s, offset[p], node[p])
        return values

    def double_layer(self, s, targets) -> np.ndarray:
        """w_i d g0(s, z_i, y_m)/d N(z_i) as (Q, M, Y), patch-integrated where y_m is attached to z_i."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        targets = np.asarray(targets, dtype=float).reshape(-1, self.dim)
        g = self._g0_iso(s, self.points, targets)
        proj = np.einsum("id,imd->im", self.normals, targets[None, :, :] - self.points[:, None, :])
        values = g * proj[None] / s[:, None, None] * self.weights[None, :, None]
        node, offset = self.attach(targets)
        for m in np.flatnonzero(node >= 0):
            values[:, node[m], m] = self.patch_conormal(s, offset[m], node[m])
        return values

    def pointwise_g0(self, t: float, x, y) -> np.ndarray:
        """g0(t, x_p, y_m) as (P, Y)."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        y = np.asarray(y, dtype=float).reshape(-1, self.dim)
        return self._g0_iso(np.array([t]), x, y)[0]
