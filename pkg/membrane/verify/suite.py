"""
The martingale battery and the calibration of the full suite under a
known-good configuration.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.model.test_functions import CappedDistance, PolynomialFunction, TestFunction, TimeBump
from membrane.simulate.ensemble import Ensemble, run_ensemble
from membrane.simulate.scheme import SimScheme
from membrane.verify.martingale import check_martingale
from membrane.verify.reports import CheckResult, MartingaleReport, verdict_of

logger = logging.getLogger(__name__)

# Under q = 0, r = 0 at most this fraction of suites may fail.
CALIBRATION_ALLOWANCE = 0.05


def default_battery(surface: Surface, t_end: float, caps: Sequence[int] = (1, 2)) -> list[TestFunction]:
    """Polynomials, a polynomial under a time bump, and capped distances."""
    dim = surface.dim
    bump = TimeBump(0.1 * t_end, 0.9 * t_end)
    battery: list[TestFunction] = [
        PolynomialFunction.coordinate(dim),
        PolynomialFunction.square(dim),
        PolynomialFunction.coordinate(dim, time_factor=bump),
    ]
    battery.extend(CappedDistance(surface, m) for m in caps)
    return battery


def martingale_suite(
    ensemble: Ensemble,
    checkpoints: Sequence[float],
    battery: Optional[Sequence[TestFunction]] = None,
) -> list[MartingaleReport]:
    """check_martingale for every function, Bonferroni over the whole battery."""
    battery = list(battery) if battery is not None else default_battery(ensemble.surface, ensemble.scheme.t_end)
    return [check_martingale(f, ensemble, checkpoints, family_size=len(battery)) for f in battery]


def calibrate(
    spec: DiffusionSpec,
    surface: Surface,
    start,
    scheme: SimScheme,
    n_paths: int,
    n_seeds: int,
    checkpoints: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> CheckResult:
    """
    Repeat the martingale suite over seeds scheme.seed .. scheme.seed + n_seeds - 1
    and report the fraction of suites with any failure.
    """
    checkpoints = list(checkpoints) if checkpoints is not None else list(np.linspace(0, scheme.t_end, 5)[1:])
    failures = []
    for offset in range(n_seeds):
        seed = scheme.seed + offset
        ensemble = run_ensemble(spec, surface, start, scheme.with_(seed=seed), n_paths, workers=workers)
        reports = martingale_suite(ensemble, checkpoints)
        if not all(r.passed for r in reports):
            failures.append(seed)
            logger.info(f"Calibration seed {seed}: suite failed ({[r.function for r in reports if not r.passed]})")
    fraction = len(failures) / max(n_seeds, 1)
    logger.info(f"Calibration: {len(failures)}/{n_seeds} suites failed ({fraction:.1%})")
    return CheckResult(
        "calibration",
        verdict_of(fraction <= CALIBRATION_ALLOWANCE),
        {"n_seeds": n_seeds, "failed_seeds": failures, "fraction": fraction, "allowance": CALIBRATION_ALLOWANCE},
    )
