"""
Randomized audit of conditions J and of the membrane function ranges.

Conditions J cannot be proved for a black-box b; the audit samples points,
directions and close pairs, and reports the worst witnesses it found.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface, SurfaceKind

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
RANGE_TOLERANCE = 1e-12


@dataclass
class Witness:
    """A sampled point (and direction or partner point) where a bound is worst."""

    check: str
    value: float
    bound: float
    x: list
    other: Optional[list] = None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "value": self.value,
            "bound": self.bound,
            "x": self.x,
            "other": self.other,
        }


@dataclass
class JReport:
    passed: bool
    n_samples: int
    seed: int
    failures: list[str] = field(default_factory=list)
    witnesses: dict[str, Witness] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "failures": list(self.failures),
            "witnesses": {k: w.to_dict() for k, w in self.witnesses.items()},
        }


def _canonical_direction(v: np.ndarray) -> np.ndarray:
    # Eigenvectors are defined up to sign; make the largest component positive.
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


def _ellipticity(spec: DiffusionSpec, points: np.ndarray, report: JReport) -> None:
    mats = spec.b_at(points)
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    w, v = np.linalg.eigh(mats)
    lo = int(np.argmin(w[:, 0]))
    hi = int(np.argmax(w[:, -1]))
    report.witnesses["ellipticity_min"] = Witness(
        "ellipticity_min",
        float(w[lo, 0]),
        spec.C1,
        points[lo].tolist(),
        _canonical_direction(v[lo, :, 0]).tolist(),
    )
    report.witnesses["ellipticity_max"] = Witness(
        "ellipticity_max",
        float(w[hi, -1]),
        spec.C2,
        points[hi].tolist(),
        _canonical_direction(v[hi, :, -1]).tolist(),
    )
    if w[lo, 0] < spec.C1 * (1.0 - 1e-12):
        report.failures.append(f"lower ellipticity: eigenvalue {w[lo, 0]:.6g} < C1={spec.C1}")
    if w[hi, -1] > spec.C2 * (1.0 + 1e-12):
        report.failures.append(f"upper ellipticity: eigenvalue {w[hi, -1]:.6g} > C2={spec.C2}")


def _symmetry(spec: DiffusionSpec, points: np.ndarray, report: JReport) -> None:
    mats = spec.b_at(points)
    asym = np.abs(mats - np.swapaxes(mats, -1, -2)).max(axis=(-1, -2))
    k = int(np.argmax(asym))
    scale = max(1.0, float(np.abs(mats[k]).max()))
    report.witnesses["symmetry"] = Witness("symmetry", float(asym[k]), SYMMETRY_TOLERANCE * scale, points[k].tolist())
    if asym[k] > SYMMETRY_TOLERANCE * scale:
        report.failures.append(f"b is not symmetric: |b - b^T| = {asym[k]:.3g}")


def _holder_ratio(spec: DiffusionSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = np.abs(spec.b_at(x) - spec.b_at(y)).max(axis=(-1, -2))
    dist = np.linalg.norm(x - y, axis=-1)
    return diff / np.maximum(dist, 1e-300) ** spec.alpha


def _holder(
    spec: DiffusionSpec,
    points: np.ndarray,
    rng: np.random.Generator,
    radius: float,
    report: JReport,
) -> None:
    if spec.is_constant:
        report.witnesses["holder"] = Witness("holder", 0.0, spec.L, points[0].tolist(), points[0].tolist())
        return
    scales = 10.0 ** rng.uniform(-4, 0, size=(len(points), 1))
    partners = points + scales * rng.standard_normal(points.shape)
    candidates = [(points, partners)]
    if spec.dim == 1:
        # Dense scan catches the steepest slope that random pairs can miss.
        grid = np.linspace(-radius, radius, 20001)[:, None]
        candidates.append((grid[:-1], grid[1:]))
    best_ratio, best_pair = -1.0, None
    for a, b in candidates:
        ratio = _holder_ratio(spec, a, b)
        k = int(np.argmax(ratio))
        if ratio[k] > best_ratio:
            best_ratio, best_pair = float(ratio[k]), (a[k], b[k])
    report.witnesses["holder"] = Witness(
        "holder", best_ratio, spec.L, best_pair[0].tolist(), best_pair[1].tolist()
    )
    if best_ratio > spec.L * (1.0 + 1e-9) + 1e-12:
        report.failures.append(f"Hoelder bound: ratio {best_ratio:.6g} > L={spec.L}")


def _membrane_ranges(spec: DiffusionSpec, surface: Surface, rng: np.random.Generator, n: int, report: JReport) -> None:
    if surface.kind is SurfaceKind.HYPERPLANE:
        raw = rng.uniform(-5.0, 5.0, size=(n, surface.dim))
        pts = surface.project(raw)
    elif surface.kind is SurfaceKind.POINT:
        pts = np.full((1, 1), surface.offset)
    else:
        raw = rng.standard_normal((n, surface.dim)) + np.asarray(surface.center)
        pts = surface.project(raw)
    q = spec.q(pts)
    r = spec.r(pts)
    kq = int(np.argmax(np.abs(q)))
    kr = int(np.argmin(r))
    report.witnesses["q_range"] = Witness("q_range", float(q[kq]), 1.0, pts[kq].tolist())
    report.witnesses["r_range"] = Witness("r_range", float(r[kr]), 0.0, pts[kr].tolist())
    if abs(q[kq]) > 1.0 + RANGE_TOLERANCE:
        report.failures.append(f"|q| = {abs(q[kq]):.6g} > 1 on S")
    if r[kr] < -RANGE_TOLERANCE:
        report.failures.append(f"r = {r[kr]:.6g} < 0 on S")
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(r))):
        report.failures.append("q or r not finite on S")


def validate_conditions_J(
    spec: DiffusionSpec,
    surface: Optional[Surface] = None,
    n_samples: int = 4096,
    seed: int = 0,
    radius: float = 5.0,
) -> JReport:
    """
    Audit ellipticity, symmetry and the Hoelder bound of b on random samples in
    the box [-radius, radius]^d, and the ranges of q and r on S.

    Never raises on a violated bound; the report carries the witnesses.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    points = rng.uniform(-radius, radius, size=(n_samples, spec.dim))
    if spec.is_constant:
        points = points[:1]
    report = JReport(passed=False, n_samples=n_samples, seed=seed)
    _symmetry(spec, points, report)
    _ellipticity(spec, points, report)
    _holder(spec, points, rng, radius, report)
    if surface is not None:
        _membrane_ranges(spec, surface, rng, n_samples, report)
    report.passed = not report.failures
    if report.passed:
        logger.debug(f"Conditions J audit passed ({n_samples} samples, seed {seed})")
    else:
        logger.warning(f"Conditions J audit failed: {'; '.join(report.failures)}")
    return report
