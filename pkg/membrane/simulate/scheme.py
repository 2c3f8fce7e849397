"""
Simulation scheme parameters.
"""

from dataclasses import asdict, dataclass
from enum import Enum

from membrane.errors import SchemeError


class SkewMode(str, Enum):
    CROSSING_RESAMPLE = "crossing-resample"
    MOLLIFIED_DRIFT = "mollified-drift"


# artanh(q) blows up at |q| = 1; the mollified drift refuses skews beyond this.
MOLLIFIED_MAX_SKEW = 0.99


@dataclass(frozen=True)
class SimScheme:
    """
    Euler-Maruyama discretisation of the skew diffusion.

    `dt` is the step of the operational clock s and of the physical output grid,
    `eps` the local-time band half-width, `eps_drift` the mollifier half-width
    used by the mollified-drift mode. `bridge_crossing` additionally resamples
    the side after steps whose Brownian bridge may have touched S.
    """

    dt: float = 1e-3
    t_end: float = 1.0
    eps: float = 0.01
    skew_mode: SkewMode = SkewMode.CROSSING_RESAMPLE
    eps_drift: float = 0.01
    bridge_crossing: bool = False
    seed: int = 0
    chunk_size: int = 2048
    max_diverged_fraction: float = 0.01

    def __post_init__(self) -> None:
        object.__setattr__(self, "skew_mode", SkewMode(self.skew_mode))
        if not self.dt > 0:
            raise SchemeError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise SchemeError(f"t_end must be positive, got {self.t_end}")
        if not self.eps > 0:
            raise SchemeError(f"eps must be positive, got {self.eps}")
        if self.skew_mode is SkewMode.MOLLIFIED_DRIFT and not self.eps_drift > 0:
            raise SchemeError("eps_drift must be positive in mollified-drift mode")
        if self.chunk_size < 1:
            raise SchemeError("chunk_size must be positive")
        if self.seed < 0:
            raise SchemeError("seed must be non-negative")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def with_(self, **changes) -> "SimScheme":
        data = asdict(self)
        data.update(changes)
        return SimScheme(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["skew_mode"] = self.skew_mode.value
        return data
