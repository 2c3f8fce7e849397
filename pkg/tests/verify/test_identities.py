import numpy as np
import pytest

from membrane.model.coefficients import DiffusionSpec
from membrane.model.surface import Surface
from membrane.model.test_functions import TimeBump, erf_step
from membrane.pde.grid import Grid1D
from membrane.pde.operators import evaluate_Ktilde
from membrane.simulate.ensemble import run_ensemble
from membrane.simulate.scheme import SimScheme
from membrane.verify.consistency import check_uniqueness_consistency, potential_route_applies
from membrane.verify.identities import check_leaves_surface, check_occupation_identity, check_rate_scaling
from membrane.verify.martingale import check_boundary_martingale
from membrane.verify.reports import HEADER, Verdict


@pytest.fixture(scope="module")
def sticky_ensemble():
    scheme = SimScheme(dt=1e-3, t_end=0.3, eps=0.02, seed=5, chunk_size=1000)
    return run_ensemble(DiffusionSpec(dim=1, q=0.5, r=1.0), Surface.point(0.0), [0.0], scheme, 2000)


def test_occupation_is_trivial_without_delay(point, skew_spec, small_scheme):
    ensemble = run_ensemble(skew_spec, point, [0.0], small_scheme.with_(t_end=0.05), 50)
    result = check_occupation_identity(ensemble)
    assert result.verdict is Verdict.PASS
    assert result.statistics["note"] == "r = 0"


@pytest.mark.slow
def test_occupation_matches_gamma_integral(sticky_ensemble):
    result = check_occupation_identity(sticky_ensemble, eps_schedule=(0.04, 0.02, 0.01), tolerance=0.1)
    assert result.passed, result.statistics["extrapolated_relative"]


def test_rate_scaling_is_linear(sticky_ensemble):
    result = check_rate_scaling(sticky_ensemble)
    assert result.passed, result.statistics
    assert result.statistics["slope"] > 0


def test_gamma_positive_from_s(sticky_ensemble):
    result = check_leaves_surface(sticky_ensemble, t=0.1)
    assert result.passed
    assert result.statistics["fraction"] >= 0.99


@pytest.mark.slow
def test_boundary_process_solves_its_martingale_problem(sticky_ensemble):
    h = TimeBump(0.05, 0.2)
    ktilde = evaluate_Ktilde(h, sticky_ensemble.spec, sticky_ensemble.surface, Grid1D.line(0.02, 4.0, 2e-4, 0.2))
    theta_max = float(np.quantile(sticky_ensemble.gamma_at(0.3), 0.1))
    report = check_boundary_martingale(h, sticky_ensemble, ktilde, np.linspace(0.0, theta_max, 41))
    assert report.kind == "boundary-martingale"
    assert report.meta["start_exact"]
    assert report.truncated_fraction <= 0.2
    assert report.verdict is Verdict.PASS, report.to_dict()


def test_potential_route_applicability(point, skew_spec, sticky_spec, circle):
    assert potential_route_applies(skew_spec, point)
    assert not potential_route_applies(sticky_spec, point)
    assert not potential_route_applies(DiffusionSpec(dim=2), circle)


@pytest.mark.slow
def test_routes_agree_on_the_null_membrane(point, null_spec):
    scheme = SimScheme(dt=1e-3, t_end=0.5, eps=0.01, seed=42, chunk_size=2000)
    result = check_uniqueness_consistency(
        null_spec,
        point,
        erf_step(0.1),
        np.array([0.2]),
        [0.25, 0.5],
        scheme,
        4000,
        Grid1D.line(0.02, 6.0, 2e-4, 0.5),
    )
    assert result.header == HEADER
    assert set(result.statistics["values"]) == {"monte-carlo", "pde", "potential"}
    assert result.passed, result.statistics["pairs"]
