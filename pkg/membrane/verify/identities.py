"""
Pathwise identities of the time change, checked on ensemble means:

* int_0^t 1_S(x(u)) du = int_0^t r(x(u)) d gamma(u), with the band (and the
  holds) standing in for S, extrapolated to eps -> 0;
* int r d gamma is linear in a constant r at matched operational times;
* gamma(t) > 0 for t > 0 from starts on S.
"""

import logging
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from membrane.simulate.density import mean_estimate
from membrane.simulate.ensemble import Ensemble
from membrane.simulate.localtime import attach_eta
from membrane.simulate.timechange import apply_time_change, gamma_integral, operational_clock
from membrane.verify.reports import CheckResult, Verdict, verdict_of

logger = logging.getLogger(__name__)

EPS_SCHEDULE = (0.04, 0.02, 0.01)


def _rebanded(ensemble: Ensemble, eps: float) -> list:
    """Copies of the bundles with eta, gamma and occupation redone at band eps."""
    out = []
    for bundle in ensemble.bundles:
        copy = replace(bundle, meta=dict(bundle.meta))
        attach_eta(copy, ensemble.surface, eps)
        apply_time_change(copy, ensemble.spec, ensemble.surface, eps=eps)
        out.append(copy)
    return out


def _extrapolate(eps: Sequence[float], values: Sequence[float]) -> float:
    """Linear extrapolation to eps = 0 from the two smallest band widths."""
    (e1, v1), (e2, v2) = sorted(zip(eps, values))[:2]
    return (e2 * v1 - e1 * v2) / (e2 - e1)


def _trend_ok(values: Sequence[float]) -> bool:
    """Decreasing along the schedule, one inversion allowed."""
    inversions = sum(1 for a, b in zip(values[:-1], values[1:]) if b > a)
    return inversions <= 1


def check_occupation_identity(
    ensemble: Ensemble,
    eps_schedule: Sequence[float] = EPS_SCHEDULE,
    checkpoints: Optional[Sequence[float]] = None,
    tolerance: float = 0.05,
) -> CheckResult:
    """
    Ensemble means of the occupation of S and of int r d gamma at each band
    width, and their relative discrepancy after extrapolation in eps.
    """
    spec, surface = ensemble.spec, ensemble.surface
    checkpoints = list(checkpoints) if checkpoints is not None else [float(ensemble.times[-1])]
    if spec.r.is_constant and spec.r.constant == 0.0:
        logger.info("Occupation identity with r = 0: both sides vanish")
        return CheckResult(
            "occupation-identity",
            Verdict.PASS,
            {"eps": list(eps_schedule), "checkpoints": checkpoints, "relative": 0.0, "note": "r = 0"},
        )

    schedule = sorted(eps_schedule, reverse=True)
    lhs = np.zeros((len(schedule), len(checkpoints)))
    rhs = np.zeros_like(lhs)
    stderr = np.zeros_like(lhs)
    for i, eps in enumerate(schedule):
        bundles = _rebanded(ensemble, eps)
        for j, t in enumerate(checkpoints):
            left, right = [], []
            for b in bundles:
                k = b.time_index(t)
                keep = b.valid & ~b.truncated
                left.append(b.occupation[keep, k])
                right.append(gamma_integral(b, spec, surface)[keep, k])
            left, right = np.concatenate(left), np.concatenate(right)
            lhs[i, j] = left.mean()
            rhs[i, j] = right.mean()
            stderr[i, j] = mean_estimate(left - right).stderr

    scale = np.maximum(np.abs(rhs), 1e-12)
    relative = np.abs(lhs - rhs) / scale
    lhs0 = np.array([_extrapolate(schedule, lhs[:, j]) for j in range(len(checkpoints))])
    rhs0 = np.array([_extrapolate(schedule, rhs[:, j]) for j in range(len(checkpoints))])
    relative0 = np.abs(lhs0 - rhs0) / np.maximum(np.abs(rhs0), 1e-12)
    trend = all(_trend_ok(relative[:, j]) for j in range(len(checkpoints)))
    if not trend:
        logger.warning(f"Occupation discrepancy does not shrink with eps: {relative.tolist()}")
    passed = bool(np.all(relative0 <= tolerance))
    logger.info(f"Occupation identity: extrapolated relative discrepancy {np.max(relative0):.3%}")
    return CheckResult(
        "occupation-identity",
        verdict_of(passed),
        {
            "eps": schedule,
            "checkpoints": checkpoints,
            "occupation": lhs,
            "gamma_integral": rhs,
            "difference_stderr": stderr,
            "relative": relative,
            "extrapolated_relative": relative0,
            "monotone_in_eps": trend,
            "tolerance": tolerance,
        },
    )


def check_rate_scaling(ensemble: Ensemble, rates: Sequence[float] = (0.5, 1.0, 2.0), s: Optional[float] = None) -> CheckResult:
    """
    int r d gamma at the physical time matching operational time s, for
    constant r = c on the same base paths; regresses its mean on c.
    """
    s = float(ensemble.base_times[-1]) * 0.5 if s is None else float(s)
    means = []
    for c in rates:
        spec = replace(ensemble.spec, r=float(c))
        values = []
        for bundle in ensemble.bundles:
            copy = replace(bundle, meta=dict(bundle.meta))
            clock, _ = operational_clock(copy, spec, ensemble.surface)
            apply_time_change(copy, spec, ensemble.surface, horizon=float(np.max(clock[:, -1])))
            k = copy.base_index(s)
            physical = copy.clock[:, k]
            index = np.clip(np.searchsorted(copy.times, physical - 1e-12), 0, len(copy.times) - 1)
            integral = gamma_integral(copy, spec, ensemble.surface)
            values.append(integral[np.arange(copy.n_paths), index][copy.valid])
        means.append(float(np.concatenate(values).mean()))
    fit = stats.linregress(np.asarray(rates, dtype=float), np.asarray(means))
    slope = float(fit.slope)
    passed = fit.rvalue**2 >= 0.999 and abs(float(fit.intercept)) <= 0.05 * max(abs(slope), 1e-12)
    return CheckResult(
        "rate-scaling",
        verdict_of(bool(passed)),
        {"rates": list(rates), "means": means, "slope": slope, "intercept": float(fit.intercept), "r2": float(fit.rvalue**2)},
    )


def check_leaves_surface(ensemble: Ensemble, t: float = 0.1, threshold: float = 0.99) -> CheckResult:
    """Starts on S: the fraction of paths with gamma(t) > 0 must reach `threshold`."""
    gamma = ensemble.gamma_at(t)
    fraction = float(np.mean(gamma > 0.0))
    return CheckResult("leaves-surface", verdict_of(fraction >= threshold), {"t": t, "fraction": fraction, "threshold": threshold})
