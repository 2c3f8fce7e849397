"""
One-sided limits and conormal derivatives at S from values on fringe points
z +/- k*h*nu, k in (1, 2, 4), extrapolated to h -> 0.
"""

import numpy as np

from membrane.potential.kernels import SurfaceNodes

FRINGE_STEPS = (1, 2, 4)
# Block order of fringe_points: S itself, then the exterior, then the interior offsets.
FRINGE_LAYOUT = (0, 1, 2, 4, -1, -2, -4)


def fringe_points(nodes: SurfaceNodes, h: float) -> np.ndarray:
    """(7M, d) points: the nodes and their offsets k*h along +/- nu, blocks as in FRINGE_LAYOUT."""
    return np.concatenate([nodes.offset_points(k * h) for k in FRINGE_LAYOUT])


def split_fringe(values: np.ndarray, n_nodes: int, axis: int = 1) -> dict[int, np.ndarray]:
    """Blocks of `values` along `axis` keyed by offset multiple."""
    return {
        k: np.take(values, np.arange(b * n_nodes, (b + 1) * n_nodes), axis=axis)
        for b, k in enumerate(FRINGE_LAYOUT)
    }


def one_sided_limits(blocks: dict[int, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """u(y+) and u(y-) by quadratic extrapolation from h, 2h, 4h."""
    plus = (8.0 * blocks[1] - 6.0 * blocks[2] + blocks[4]) / 3.0
    minus = (8.0 * blocks[-1] - 6.0 * blocks[-2] + blocks[-4]) / 3.0
    return plus, minus


def one_sided_derivatives(blocks: dict[int, np.ndarray], h: float, sigma2: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """
    Conormal derivatives sigma^2 du/dnu from outside and inside: three-point
    one-sided stencils at h and 2h combined by Richardson extrapolation.
    """
    u0 = blocks[0]

    def outside(k: int) -> np.ndarray:
        step = k * h
        return (-3.0 * u0 + 4.0 * blocks[k] - blocks[2 * k]) / (2.0 * step)

    def inside(k: int) -> np.ndarray:
        step = k * h
        return (3.0 * u0 - 4.0 * blocks[-k] + blocks[-2 * k]) / (2.0 * step)

    plus = (4.0 * outside(1) - outside(2)) / 3.0
    minus = (4.0 * inside(1) - inside(2)) / 3.0
    return sigma2 * plus, sigma2 * minus
