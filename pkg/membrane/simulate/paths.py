"""
Path containers.

A PathBundle holds a batch of paths (one simulation chunk or a hand-built
synthetic batch) as arrays with the path axis first. The base layer lives on
the operational clock s, the changed layer on the physical clock t.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


@dataclass
class PathBundle:
    path_ids: np.ndarray
    base_times: np.ndarray  # (K+1,)
    base_states: np.ndarray  # (n, K+1, d)
    # (n, K): the unfolded Euler increment of step k changed the side of S
    crossed: Optional[np.ndarray] = None
    diverged: Optional[np.ndarray] = None  # (n,)
    eta: Optional[np.ndarray] = None  # (n, K+1)
    eps: Optional[float] = None
    # changed layer
    clock: Optional[np.ndarray] = None  # A(s_k), (n, K+1)
    times: Optional[np.ndarray] = None  # (M+1,)
    zeta: Optional[np.ndarray] = None  # (n, M+1)
    states: Optional[np.ndarray] = None  # (n, M+1, d)
    gamma: Optional[np.ndarray] = None  # (n, M+1)
    occupation: Optional[np.ndarray] = None  # (n, M+1)
    held: Optional[np.ndarray] = None  # (n, M+1): x(t) sits on S during a delay
    truncated: Optional[np.ndarray] = None  # (n,)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.base_times = np.asarray(self.base_times, dtype=float)
        self.base_states = np.asarray(self.base_states, dtype=float)
        if self.base_states.ndim == 2:
            self.base_states = self.base_states[..., None]
        n, k1, _ = self.base_states.shape
        if k1 != len(self.base_times):
            raise ValueError("base_states and base_times disagree on the number of steps")
        self.path_ids = np.asarray(self.path_ids)
        if self.diverged is None:
            self.diverged = np.zeros(n, dtype=bool)

    @property
    def n_paths(self) -> int:
        return self.base_states.shape[0]

    @property
    def dim(self) -> int:
        return self.base_states.shape[-1]

    @property
    def valid(self) -> np.ndarray:
        return ~self.diverged

    @property
    def has_changed_layer(self) -> bool:
        return self.states is not None

    def time_index(self, t: float) -> int:
        """Index of the physical grid point nearest to t."""
        if self.times is None:
            raise ValueError("time change not applied")
        return int(np.argmin(np.abs(self.times - t)))

    def base_index(self, s: float) -> int:
        return int(np.argmin(np.abs(self.base_times - s)))

    def select(self, mask: np.ndarray) -> "PathBundle":
        """A bundle restricted to the paths where mask is true."""
        mask = np.asarray(mask, dtype=bool)

        def pick(a):
            return None if a is None else a[mask]

        return replace(
            self,
            path_ids=self.path_ids[mask],
            base_states=self.base_states[mask],
            crossed=pick(self.crossed),
            diverged=self.diverged[mask],
            eta=pick(self.eta),
            clock=pick(self.clock),
            zeta=pick(self.zeta),
            states=pick(self.states),
            gamma=pick(self.gamma),
            occupation=pick(self.occupation),
            held=pick(self.held),
            truncated=pick(self.truncated),
            meta=dict(self.meta),
        )


@dataclass
class BoundaryPath:
    """
    Boundary process samples for a batch of paths started on S.

    tau[i, j] = inf and y[i, j] = nan once thetas[j] reaches gamma(T_end) of
    path i (the cemetery).
    """

    path_ids: np.ndarray
    thetas: np.ndarray  # (J,)
    tau: np.ndarray  # (n, J)
    y: np.ndarray  # (n, J, d)
    exhausted_at: np.ndarray  # (n,) gamma(T_end), the first cemetery theta

    @property
    def n_paths(self) -> int:
        return self.tau.shape[0]

    @property
    def alive(self) -> np.ndarray:
        return np.isfinite(self.tau)

    def truncated_before(self, theta: float) -> np.ndarray:
        """Paths whose boundary process dies before the local-time level theta."""
        return self.exhausted_at <= theta
