"""
Verdict carriers and their JSON files.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

logger = logging.getLogger(__name__)

HEADER = (
    "Cross-route agreement of finite-dimensional functionals only; "
    "uniqueness of the underlying measure is not something a finite test can assert."
)


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


def jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    if is_dataclass(value):
        return jsonable(asdict(value))
    return value


@dataclass
class MartingaleReport:
    """Mean increments of a compensated process at consecutive checkpoints."""

    function: str
    checkpoints: list[float]
    mean_increments: np.ndarray
    stderrs: np.ndarray
    z_scores: np.ndarray
    critical_value: float
    n_paths: int
    verdict: Verdict
    kind: str = "martingale"
    truncated_fraction: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def to_dict(self) -> dict:
        return jsonable({**self.__dict__, "passed": self.passed})


@dataclass
class CheckResult:
    """Any other named verdict with its statistics."""

    name: str
    verdict: Verdict
    statistics: dict = field(default_factory=dict)
    header: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def to_dict(self) -> dict:
        data = {"name": self.name, "verdict": self.verdict, "passed": self.passed, "statistics": self.statistics}
        if self.header:
            data["header"] = self.header
        return jsonable(data)


def verdict_of(passed: bool) -> Verdict:
    return Verdict.PASS if passed else Verdict.FAIL


def write_verdict(report, path: Path) -> Path:
    """One JSON file per check."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict() if hasattr(report, "to_dict") else jsonable(report)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True))
    logger.debug(f"Wrote verdict {path}")
    return path
