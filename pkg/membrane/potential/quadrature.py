"""
Time quadrature for Volterra equations with weakly singular kernels.

Unknowns are piecewise linear on a uniform grid t_n = n * delta. Kernels known
in closed form are integrated against the two hat functions of every lag cell
on Gauss-Legendre rules graded geometrically towards the singular end, so the
t^(-1/2) endpoint behaviour and the exp(-d^2 / s) layers near s = 0 are
resolved without refining the grid itself.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

Kernel = Callable[[np.ndarray], np.ndarray]

# Cells evaluated per kernel call; bounds peak memory for large surface tables.
CELL_BLOCK = 64


@lru_cache(maxsize=16)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_rule(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_rule(a: float, b: float, order: int = 8, levels: int = 24, toward: str = "left") -> tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss-Legendre rule on [a, b] with subintervals halving towards
    `toward` ("left", "right" or "both").
    """
    if b <= a:
        return np.zeros(0), np.zeros(0)
    if toward == "both":
        mid = 0.5 * (a + b)
        xl, wl = graded_rule(a, mid, order, levels, "left")
        xr, wr = graded_rule(mid, b, order, levels, "right")
        return np.concatenate([xl, xr]), np.concatenate([wl, wr])
    length = b - a
    edges = length * np.concatenate([[0.0], 0.5 ** np.arange(levels, -1, -1)])
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_rule(lo, hi, order)
        nodes.append(x)
        weights.append(w)
    x = np.concatenate(nodes)
    w = np.concatenate(weights)
    if toward == "left":
        return a + x, w
    if toward == "right":
        return b - x[::-1], w[::-1]
    raise ValueError(f"unknown grading direction {toward!r}")


@dataclass(frozen=True)
class HatMoments:
    """
    Per lag cell c = 1..N, the integrals of a kernel against the hat equal to
    one at the cell start ((c-1) delta) and at the cell end (c delta).
    """

    start: np.ndarray  # (N, *shape)
    end: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.start.shape[0]

    def __add__(self, other: "HatMoments") -> "HatMoments":
        return HatMoments(self.start + other.start, self.end + other.end)

    def scaled(self, factor) -> "HatMoments":
        """Multiply by `factor` broadcast over the trailing axes."""
        return HatMoments(self.start * factor, self.end * factor)

    def transposed(self) -> "HatMoments":
        return HatMoments(np.swapaxes(self.start, -1, -2), np.swapaxes(self.end, -1, -2))

    def take(self, axis: int, index) -> "HatMoments":
        return HatMoments(np.take(self.start, index, axis=axis + 1), np.take(self.end, index, axis=axis + 1))


def kernel_moments(kernel: Kernel, delta: float, n_cells: int, order: int = 8, levels: int = 24) -> HatMoments:
    """
    Hat moments of a closed-form kernel k(s), s > 0, returning (n_q, *shape)
    for a 1-D array of n_q lags. The first cell is graded towards s = 0.
    """
    x1, w1 = graded_rule(0.0, delta, order, levels, "left")
    k1 = np.asarray(kernel(x1), dtype=float)
    shape = k1.shape[1:]
    start = np.empty((n_cells, *shape))
    end = np.empty((n_cells, *shape))
    start[0] = np.tensordot(w1 * (delta - x1) / delta, k1, axes=1)
    end[0] = np.tensordot(w1 * x1 / delta, k1, axes=1)

    g, gw = _legendre(order)
    frac = 0.5 * (g + 1.0)
    w_start = 0.5 * delta * gw * (1.0 - frac)
    w_end = 0.5 * delta * gw * frac
    for lo in range(1, n_cells, CELL_BLOCK):
        hi = min(lo + CELL_BLOCK, n_cells)
        s = (np.arange(lo, hi)[:, None] + frac[None, :]) * delta
        k = np.asarray(kernel(s.ravel()), dtype=float).reshape(hi - lo, len(g), *shape)
        start[lo:hi] = np.tensordot(k, w_start, axes=([1], [0]))
        end[lo:hi] = np.tensordot(k, w_end, axes=([1], [0]))
    return HatMoments(start, end)


def linear_moments(table: np.ndarray, delta: float) -> HatMoments:
    """Hat moments of a kernel given by its values at s = 0, delta, ..., N delta, linear in between."""
    lo, hi = table[:-1], table[1:]
    return HatMoments(delta * (lo / 3.0 + hi / 6.0), delta * (lo / 6.0 + hi / 3.0))


def _einsum_cells(subscripts: str, moments: np.ndarray, values: np.ndarray) -> np.ndarray:
    lhs, out = subscripts.split("->")
    k_sub, f_sub = lhs.split(",")
    return np.einsum(f"c{k_sub},c{f_sub}->{out}", moments, values)


def lag_sum(moments: HatMoments, f: np.ndarray, n: int, subscripts: str, implicit: bool = False) -> np.ndarray:
    """
    The discrete convolution int_0^{t_n} k(s) f(t_n - s) ds for f known at
    t_0..t_n. With `implicit` the term carrying f(t_n) is left out, so it can
    be moved to the left-hand side.

    `subscripts` contracts one cell, e.g. "ij,pi->pj" for kernel (i, j) and
    f (p, i).
    """
    if implicit:
        head = _einsum_cells(subscripts, moments.start[1:n], f[n - 1 : 0 : -1]) if n > 1 else 0.0
    else:
        head = _einsum_cells(subscripts, moments.start[:n], f[n:0:-1])
    tail = _einsum_cells(subscripts, moments.end[:n], f[n - 1 :: -1] if n > 0 else f[:0])
    return head + tail


def lead_sum(moments: HatMoments, f: np.ndarray, n: int, subscripts: str, implicit: bool = False) -> np.ndarray:
    """
    The discrete integral int_0^{t_N - t_n} k(s) f(t_n + s) ds for f known at
    t_n..t_N (N = len(f) - 1); `implicit` leaves out the term carrying f(t_n).
    """
    n_total = len(f) - 1
    m = n_total - n
    if implicit:
        head = _einsum_cells(subscripts, moments.start[1:m], f[n + 1 : n_total]) if m > 1 else 0.0
    else:
        head = _einsum_cells(subscripts, moments.start[:m], f[n:n_total])
    tail = _einsum_cells(subscripts, moments.end[:m], f[n + 1 : n_total + 1])
    return head + tail


def pair_convolution(
    first: Kernel,
    second: Kernel,
    t: float,
    subscripts: str,
    order: int = 8,
    levels: int = 24,
) -> np.ndarray:
    """
    int_0^t first(tau) * second(t - tau) d tau for two closed-form kernels,
    both possibly singular at their own s = 0, on a rule graded at both ends.
    `subscripts` contracts one node, e.g. "pi,ij->pj".
    """
    tau, w = graded_rule(0.0, t, order, levels, "both")
    a = np.asarray(first(tau), dtype=float)
    b = np.asarray(second(t - tau), dtype=float)
    lhs, out = subscripts.split("->")
    a_sub, b_sub = lhs.split(",")
    return np.einsum(f"q,q{a_sub},q{b_sub}->{out}", w, a, b)


def trapezoid_convolution(f: np.ndarray, g: np.ndarray, n: int, delta: float, subscripts: str) -> np.ndarray:
    """Trapezoid rule for int_0^{t_n} f(tau) g(t_n - tau) d tau with both factors tabulated."""
    w = np.full(n + 1, delta)
    w[0] = w[-1] = 0.5 * delta
    if n == 0:
        w[:] = 0.0
    lhs, out = subscripts.split("->")
    a_sub, b_sub = lhs.split(",")
    return np.einsum(f"c,c{a_sub},c{b_sub}->{out}", w, f[: n + 1], g[n::-1])
