"""
Test functions f(t, x) for the martingale problem and as PDE initial data.

Every variant evaluates f, df/dt, the gradient and the Hessian off S, and its
one-sided gradients on S. Points are arrays of shape (n, d) (or (n,) in d=1);
times are scalars or arrays broadcastable to (n,).
"""

import math
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import erf

from membrane.errors import TestFunctionError
from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Side, Surface, SurfaceKind


def smoothstep5(u):
    """Quintic smoothstep: 0 at u<=0, 1 at u>=1, C2 with flat ends."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def _smoothstep5_d1(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 30.0 * u**2 * (1.0 - u) ** 2, 0.0)


def _smoothstep5_d2(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u), 0.0)


def cap_profile(d, m: int):
    """eta_m: 1 on [0, m], 0 on [m+1, inf), quintic transition in between."""
    return 1.0 - smoothstep5(np.asarray(d, dtype=float) - m)


def capped_distance(x, m: int, surface: Surface):
    """phi_m(x) = eta_m(d(x, S)) d(x, S)."""
    if m < 1:
        raise TestFunctionError(f"cap index must be >= 1, got {m}")
    d = surface.unsigned_distance(x)
    return cap_profile(d, m) * d


class TimeFactor:
    """A smooth bounded factor a(t); the default is a(t) = 1."""

    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    @property
    def support(self) -> Optional[tuple[float, float]]:
        return None

    def describe(self) -> str:
        return "1"


class TimeBump(TimeFactor):
    """exp(1 - 1/(1 - u^2)) on (start, end), u the rescaled time; peak 1 at the midpoint."""

    def __init__(self, start: float, end: float, height: float = 1.0) -> None:
        if not end > start:
            raise TestFunctionError(f"time bump needs end > start, got [{start}, {end}]")
        self.start = float(start)
        self.end = float(end)
        self.height = float(height)

    def _u(self, t):
        return (2.0 * np.asarray(t, dtype=float) - self.start - self.end) / (self.end - self.start)

    def __call__(self, t):
        u = self._u(t)
        inside = np.abs(u) < 1.0
        w = np.where(inside, 1.0 - u**2, 1.0)
        return np.where(inside, self.height * np.exp(1.0 - 1.0 / w), 0.0)

    def derivative(self, t):
        u = self._u(t)
        inside = np.abs(u) < 1.0
        w = np.where(inside, 1.0 - u**2, 1.0)
        value = np.where(inside, self.height * np.exp(1.0 - 1.0 / w), 0.0)
        du_dt = 2.0 / (self.end - self.start)
        return np.where(inside, value * (-2.0 * u / w**2) * du_dt, 0.0)

    @property
    def support(self) -> tuple[float, float]:
        return (self.start, self.end)

    def describe(self) -> str:
        return f"bump[{self.start:g},{self.end:g}]x{self.height:g}"


def _broadcast(t, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])


class TestFunction(ABC):
    """f(t, x) with derivatives off S and one-sided gradients on S."""

    __test__ = False  # not a pytest class

    name: str = "f"
    has_Kf: bool = True
    has_time_derivative: bool = True

    def __init__(self, dim: int) -> None:
        self.dim = dim

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        return x

    @abstractmethod
    def value(self, t, x) -> np.ndarray:
        ...

    @abstractmethod
    def dt(self, t, x) -> np.ndarray:
        ...

    @abstractmethod
    def grad(self, t, x) -> np.ndarray:
        ...

    @abstractmethod
    def hessian(self, t, x) -> np.ndarray:
        ...

    def one_sided_grad(self, t, x, surface: Surface, side: Side) -> np.ndarray:
        """Limit of the gradient at x in S approached from `side`; smooth functions need no side."""
        return self.grad(t, x)

    def generator(self, t, x, spec: DiffusionSpec) -> np.ndarray:
        """df/dt + 1/2 sum b_ij d2f/dx_i dx_j off S."""
        x = self._points(x)
        b = spec.b_at(x)
        return self.dt(t, x) + 0.5 * np.einsum("...ij,...ij->...", b, self.hessian(t, x))

    def conormal_derivatives(self, t, x, spec: DiffusionSpec, surface: Surface) -> tuple[np.ndarray, np.ndarray]:
        """(df/dN at x+, df/dN at x-) for x on S."""
        x = self._points(x)
        _, big_n = spec.conormal(x, surface)
        plus = np.einsum("...i,...i->...", big_n, self.one_sided_grad(t, x, surface, Side.EXTERIOR))
        minus = np.einsum("...i,...i->...", big_n, self.one_sided_grad(t, x, surface, Side.INTERIOR))
        return plus, minus

    def Kf(self, t, x, spec: DiffusionSpec, surface: Surface) -> np.ndarray:
        """(1+q)/2 df/dN(x+) - (1-q)/2 df/dN(x-) at points of S."""
        if not self.has_Kf:
            raise TestFunctionError(f"{self.name} has no one-sided co-normal derivatives")
        x = self._points(x)
        plus, minus = self.conormal_derivatives(t, x, spec, surface)
        q = spec.q(x)
        return 0.5 * (1.0 + q) * plus - 0.5 * (1.0 - q) * minus

    def surface_operator(self, t, x, spec: DiffusionSpec, surface: Surface) -> np.ndarray:
        """r df/dt + Kf at points of S: the integrand of the d(gamma) compensator."""
        x = self._points(x)
        return spec.r(x) * self.dt(t, x) + self.Kf(t, x, spec, surface)

    def describe(self) -> str:
        return self.name


class PolynomialFunction(TestFunction):
    """
    a(t) (c0 + g.x + x^T H x / 2) with a(t) a TimeFactor.

    Unbounded in x unless the caller caps the ensemble range; the time factor
    gives compact support in t when it is a TimeBump.
    """

    def __init__(
        self,
        dim: int,
        c0: float = 0.0,
        linear=None,
        quadratic=None,
        time_factor: Optional[TimeFactor] = None,
        name: Optional[str] = None,
    ) -> None:
        super().__init__(dim)
        self.c0 = float(c0)
        self.linear = np.zeros(dim) if linear is None else np.atleast_1d(np.asarray(linear, dtype=float))
        q = np.zeros((dim, dim)) if quadratic is None else np.atleast_2d(np.asarray(quadratic, dtype=float))
        if self.linear.shape != (dim,) or q.shape != (dim, dim):
            raise TestFunctionError("polynomial coefficients do not match the dimension")
        self.quadratic = 0.5 * (q + q.T)
        self.time_factor = time_factor or TimeFactor()
        self.name = name or f"poly(c0={self.c0:g}, g={self.linear.tolist()}, t={self.time_factor.describe()})"

    @classmethod
    def coordinate(cls, dim: int = 1, axis: int = 0, time_factor: Optional[TimeFactor] = None) -> "PolynomialFunction":
        g = np.zeros(dim)
        g[axis] = 1.0
        return cls(dim, linear=g, time_factor=time_factor, name=f"x{axis + 1}" if dim > 1 else "x")

    @classmethod
    def square(cls, dim: int = 1, time_factor: Optional[TimeFactor] = None) -> "PolynomialFunction":
        return cls(dim, quadratic=2.0 * np.eye(dim), time_factor=time_factor, name="|x|^2")

    @classmethod
    def constant(cls, dim: int = 1, value: float = 1.0) -> "PolynomialFunction":
        return cls(dim, c0=value, name=f"const({value:g})")

    def _space(self, x: np.ndarray) -> np.ndarray:
        return self.c0 + x @ self.linear + 0.5 * np.einsum("...i,ij,...j->...", x, self.quadratic, x)

    def value(self, t, x) -> np.ndarray:
        x = self._points(x)
        return self.time_factor(_broadcast(t, x)) * self._space(x)

    def dt(self, t, x) -> np.ndarray:
        x = self._points(x)
        return self.time_factor.derivative(_broadcast(t, x)) * self._space(x)

    def grad(self, t, x) -> np.ndarray:
        x = self._points(x)
        a = self.time_factor(_broadcast(t, x))
        return a[..., None] * (self.linear + x @ self.quadratic)

    def hessian(self, t, x) -> np.ndarray:
        x = self._points(x)
        a = self.time_factor(_broadcast(t, x))
        return a[..., None, None] * self.quadratic

    @property
    def has_time_derivative(self) -> bool:
        return type(self.time_factor) is not TimeFactor


class CappedDistance(TestFunction):
    """phi_m = eta_m(d(x,S)) d(x,S); one-sided gradients on S are +nu (outside) and -nu (inside)."""

    has_time_derivative = False

    def __init__(self, surface: Surface, m: int = 1) -> None:
        if m < 1:
            raise TestFunctionError(f"cap index must be >= 1, got {m}")
        super().__init__(surface.dim)
        self.surface = surface
        self.m = int(m)
        self.name = f"phi_{m}"

    def _profile(self, d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = d - self.m
        eta = 1.0 - smoothstep5(u)
        eta1 = -_smoothstep5_d1(u)
        eta2 = -_smoothstep5_d2(u)
        return eta * d, eta1 * d + eta, eta2 * d + 2.0 * eta1

    def value(self, t, x) -> np.ndarray:
        return capped_distance(self._points(x), self.m, self.surface)

    def dt(self, t, x) -> np.ndarray:
        x = self._points(x)
        return np.zeros(x.shape[:-1])

    def grad(self, t, x) -> np.ndarray:
        x = self._points(x)
        sd = self.surface.signed_distance(x)
        _, f1, _ = self._profile(np.abs(sd))
        return (np.sign(sd) * f1)[..., None] * self.surface.outward_direction(x)

    def hessian(self, t, x) -> np.ndarray:
        x = self._points(x)
        sd = self.surface.signed_distance(x)
        d = np.abs(sd)
        _, f1, f2 = self._profile(d)
        n = self.surface.outward_direction(x)
        out = f2[..., None, None] * np.einsum("...i,...j->...ij", n, n)
        if self.surface.kind is SurfaceKind.SPHERE:
            rho = np.maximum(self.surface.radius + sd, 1e-300)
            tangential = np.eye(self.dim) - np.einsum("...i,...j->...ij", n, n)
            out = out + (np.sign(sd) * f1 / rho)[..., None, None] * tangential
        return out

    def one_sided_grad(self, t, x, surface: Surface, side: Side) -> np.ndarray:
        x = self._points(x)
        sign = 1.0 if side is Side.EXTERIOR else -1.0
        return sign * self.surface.outward_direction(x)

    def bound(self) -> float:
        # max of eta_m(d) d is attained inside [m, m+1]
        d = np.linspace(self.m, self.m + 1, 2001)
        return float(np.max(cap_profile(d, self.m) * d))


class GridTestFunction(TestFunction):
    """
    A table u(t_k, s_j) on a line with the membrane at s=0, or radial in s=|x-c|
    with the membrane at s=R, interpolated by bicubic splines on each side.

    One-sided derivatives on S come from the side splines evaluated at the
    membrane node.
    """

    def __init__(
        self,
        times,
        nodes,
        values,
        membrane: float = 0.0,
        center=None,
        dim: int = 1,
        name: str = "grid",
    ) -> None:
        super().__init__(dim)
        self.times = np.asarray(times, dtype=float)
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.times), len(self.nodes)):
            raise TestFunctionError("grid values must have shape (len(times), len(nodes))")
        self.membrane = float(membrane)
        self.radial = center is not None
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.name = name
        m = int(np.argmin(np.abs(self.nodes - self.membrane)))
        if abs(self.nodes[m] - self.membrane) > 1e-12 * (1.0 + abs(self.membrane)):
            raise TestFunctionError("the membrane must be a grid node")
        self.membrane_index = m
        self._inner = self._spline(slice(0, m + 1))
        self._outer = self._spline(slice(m, None))

    def _spline(self, sl: slice) -> Optional[RectBivariateSpline]:
        s = self.nodes[sl]
        if len(s) < 2:
            return None
        kx = min(3, len(self.times) - 1)
        ky = min(3, len(s) - 1)
        if kx < 1:
            # a single time level: duplicate it so the spline is constant in t
            t = np.array([self.times[0], self.times[0] + 1.0])
            return RectBivariateSpline(t, s, np.vstack([self.values[0, sl]] * 2), kx=1, ky=ky)
        return RectBivariateSpline(self.times, s, self.values[:, sl], kx=kx, ky=ky)

    def _coordinate(self, x: np.ndarray) -> np.ndarray:
        if self.radial:
            return np.linalg.norm(x - self.center, axis=-1)
        return x[..., 0]

    def _ev(self, t, s, dt: int = 0, ds: int = 0, side: Optional[Side] = None) -> np.ndarray:
        t = np.broadcast_to(np.asarray(t, dtype=float), s.shape)
        out = np.empty(s.shape)
        inner = s < self.membrane if side is None else np.full(s.shape, side is Side.INTERIOR)
        for mask, spline in ((inner, self._inner), (~inner, self._outer)):
            if not np.any(mask):
                continue
            if spline is None:
                raise TestFunctionError(f"{self.name} has no grid on one side of the membrane")
            out[mask] = spline.ev(t[mask], s[mask], dx=dt, dy=ds)
        return out

    def _radial_unit(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rel = x - self.center
        rho = np.linalg.norm(rel, axis=-1)
        safe = np.where(rho > 0, rho, 1.0)
        return rel / safe[..., None], rho

    def value(self, t, x) -> np.ndarray:
        x = self._points(x)
        return self._ev(t, self._coordinate(x))

    def dt(self, t, x) -> np.ndarray:
        x = self._points(x)
        return self._ev(t, self._coordinate(x), dt=1)

    def grad(self, t, x, side: Optional[Side] = None) -> np.ndarray:
        x = self._points(x)
        s = self._coordinate(x)
        us = self._ev(t, s, ds=1, side=side)
        if not self.radial:
            return us[..., None]
        e, _ = self._radial_unit(x)
        return us[..., None] * e

    def hessian(self, t, x) -> np.ndarray:
        x = self._points(x)
        s = self._coordinate(x)
        uss = self._ev(t, s, ds=2)
        if not self.radial:
            return uss[..., None, None]
        us = self._ev(t, s, ds=1)
        e, rho = self._radial_unit(x)
        ee = np.einsum("...i,...j->...ij", e, e)
        tangential = np.eye(self.dim) - ee
        return uss[..., None, None] * ee + (us / np.maximum(rho, 1e-300))[..., None, None] * tangential

    def one_sided_grad(self, t, x, surface: Surface, side: Side) -> np.ndarray:
        return self.grad(t, x, side=side)

    @property
    def time_support(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])


def gaussian_bump(dim: int, center=0.0, width: float = 1.0, name: str = "bump") -> "SmoothSpatialFunction":
    """exp(-|x - c|^2 / (2 w^2)): a bounded C-infinity function for Laplace functionals."""
    return SmoothSpatialFunction(dim, np.atleast_1d(np.asarray(center, dtype=float)), width, name)


class SmoothSpatialFunction(TestFunction):
    """Time-independent Gaussian bump; bounded with all derivatives."""

    has_time_derivative = False

    def __init__(self, dim: int, center: np.ndarray, width: float, name: str) -> None:
        super().__init__(dim)
        self.center = np.broadcast_to(center, (dim,)).astype(float)
        self.width = float(width)
        self.name = name

    def value(self, t, x) -> np.ndarray:
        x = self._points(x)
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        return np.exp(-0.5 * r2 / self.width**2)

    def dt(self, t, x) -> np.ndarray:
        return np.zeros(self._points(x).shape[:-1])

    def grad(self, t, x) -> np.ndarray:
        x = self._points(x)
        return -(x - self.center) / self.width**2 * self.value(t, x)[..., None]

    def hessian(self, t, x) -> np.ndarray:
        x = self._points(x)
        rel = (x - self.center) / self.width**2
        outer = np.einsum("...i,...j->...ij", rel, rel)
        return (outer - np.eye(self.dim) / self.width**2) * self.value(t, x)[..., None, None]


def erf_step(width: float = 0.0):
    """Indicator 1{x > 0} (width 0) or its erf smoothing, as a plain callable of d=1 points."""

    def fn(y):
        y = np.asarray(y, dtype=float)
        if width <= 0:
            return (y > 0).astype(float)
        return 0.5 * (1.0 + erf(y / (math.sqrt(2.0) * width)))

    return fn
