"""Monte Carlo construction of the membrane process."""

from .base import biweight, simulate_base
from .density import (
    DensityTable,
    MeanEstimate,
    empirical_density,
    ks_distance_to,
    mean_estimate,
    two_sample_ks,
)
from .dumps import write_boundary_csv, write_paths_csv
from .ensemble import Ensemble, laplace_estimate, laplace_weights, run_ensemble, simulate_chunk
from .first_passage import expected_boundary_value, sample_hitting_times
from .localtime import (
    attach_eta,
    band_fraction,
    band_fractions,
    estimate_eta,
    estimate_eta_extrapolated,
)
from .paths import BoundaryPath, PathBundle
from .rng import Chunk, chunk_generator, chunk_plan
from .scheme import MOLLIFIED_MAX_SKEW, SimScheme, SkewMode
from .timechange import apply_time_change, extract_boundary_process, gamma_integral, operational_clock

__all__ = [
    "biweight",
    "simulate_base",
    "DensityTable",
    "MeanEstimate",
    "empirical_density",
    "ks_distance_to",
    "mean_estimate",
    "two_sample_ks",
    "write_boundary_csv",
    "write_paths_csv",
    "Ensemble",
    "laplace_estimate",
    "laplace_weights",
    "run_ensemble",
    "simulate_chunk",
    "expected_boundary_value",
    "sample_hitting_times",
    "attach_eta",
    "band_fraction",
    "band_fractions",
    "estimate_eta",
    "estimate_eta_extrapolated",
    "BoundaryPath",
    "PathBundle",
    "Chunk",
    "chunk_generator",
    "chunk_plan",
    "MOLLIFIED_MAX_SKEW",
    "SimScheme",
    "SkewMode",
    "apply_time_change",
    "extract_boundary_process",
    "gamma_integral",
    "operational_clock",
]
