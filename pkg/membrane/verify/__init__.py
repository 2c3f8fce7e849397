"""Statistical verification of the martingale characterization and cross-route agreement."""

from .consistency import check_uniqueness_consistency, potential_route_applies
from .identities import check_leaves_surface, check_occupation_identity, check_rate_scaling
from .martingale import (
    check_boundary_martingale,
    check_martingale,
    check_submartingale,
    compensated_process,
    surface_inequality,
)
from .reports import HEADER, CheckResult, MartingaleReport, Verdict, jsonable, verdict_of, write_verdict
from .stats import FAMILY_LEVEL, bonferroni, critical_value, ks_test, z_scores
from .suite import calibrate, default_battery, martingale_suite

__all__ = [
    "check_uniqueness_consistency",
    "potential_route_applies",
    "check_occupation_identity",
    "check_leaves_surface",
    "check_rate_scaling",
    "check_boundary_martingale",
    "check_martingale",
    "check_submartingale",
    "compensated_process",
    "surface_inequality",
    "HEADER",
    "CheckResult",
    "MartingaleReport",
    "Verdict",
    "jsonable",
    "verdict_of",
    "write_verdict",
    "FAMILY_LEVEL",
    "bonferroni",
    "critical_value",
    "ks_test",
    "z_scores",
    "calibrate",
    "default_battery",
    "martingale_suite",
]
