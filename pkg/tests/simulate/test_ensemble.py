import numpy as np
import pytest
from scipy import stats

from membrane.errors import SchemeError
from membrane.model.coefficients import DiffusionSpec
from membrane.simulate.base import simulate_base
from membrane.simulate.density import empirical_density, mean_estimate
from membrane.simulate.ensemble import laplace_estimate, run_ensemble
from membrane.simulate.first_passage import expected_boundary_value, sample_hitting_times
from membrane.simulate.scheme import SkewMode


def test_null_membrane_is_brownian(point, null_spec, small_scheme):
    ensemble = run_ensemble(null_spec, point, [0.0], small_scheme, 2000)
    x = ensemble.states_at(0.5)[:, 0]
    assert stats.kstest(x, stats.norm(scale=np.sqrt(0.5)).cdf).pvalue > 1e-3


def test_skew_sends_mass_to_the_exterior(point, skew_spec, small_scheme):
    ensemble = run_ensemble(skew_spec, point, [0.0], small_scheme, 2000)
    exterior = np.mean(ensemble.states_at(0.5)[:, 0] > 0)
    assert exterior == pytest.approx(0.75, abs=0.04)


def test_same_seed_same_paths(point, skew_spec, small_scheme):
    scheme = small_scheme.with_(t_end=0.1)
    a = run_ensemble(skew_spec, point, [0.0], scheme, 600)
    b = run_ensemble(skew_spec, point, [0.0], scheme, 600)
    np.testing.assert_array_equal(a.concat("states"), b.concat("states"))
    c = run_ensemble(skew_spec, point, [0.0], scheme.with_(seed=scheme.seed + 1), 600)
    assert not np.array_equal(a.concat("states"), c.concat("states"))


@pytest.mark.slow
def test_results_do_not_depend_on_workers(point, sticky_spec, small_scheme):
    scheme = small_scheme.with_(t_end=0.1, chunk_size=200)
    serial = run_ensemble(sticky_spec, point, [0.0], scheme, 600, workers=1)
    pooled = run_ensemble(sticky_spec, point, [0.0], scheme, 600, workers=3)
    np.testing.assert_array_equal(serial.concat("states"), pooled.concat("states"))
    np.testing.assert_array_equal(serial.concat("gamma"), pooled.concat("gamma"))


def test_dimension_mismatch(point, small_scheme):
    with pytest.raises(SchemeError):
        simulate_base(DiffusionSpec(dim=2), point, [0.0, 0.0], small_scheme, 10)


def test_mollified_drift_refuses_total_skew(point, small_scheme):
    spec = DiffusionSpec(dim=1, q=0.999)
    with pytest.raises(SchemeError):
        simulate_base(spec, point, [0.0], small_scheme.with_(skew_mode=SkewMode.MOLLIFIED_DRIFT), 10)


def test_laplace_estimate_without_killing(point, sticky_spec, small_scheme):
    ensemble = run_ensemble(sticky_spec, point, [0.0], small_scheme.with_(t_end=0.1), 200)
    est = laplace_estimate(ensemble, lambda y: np.ones(len(y)), 0.0, 0.1)
    assert est.mean == pytest.approx(1.0)
    killed = laplace_estimate(ensemble, lambda y: np.ones(len(y)), 2.0, 0.1)
    assert killed.mean < 1.0


def test_empirical_density_has_unit_mass():
    x = np.random.default_rng(0).standard_normal(5000)
    table = empirical_density(x, bins=40)
    assert table.mass == pytest.approx(1.0)
    with pytest.raises(SchemeError):
        empirical_density(x[:10])


def test_empirical_density_range_keeps_total_normalisation():
    x = np.random.default_rng(1).standard_normal(20_000)
    table = empirical_density(x, bins=20, value_range=(-1.0, 1.0))
    inside = float(np.mean(np.abs(x) <= 1.0))
    assert table.mass == pytest.approx(inside)
    assert table.outside_mass == pytest.approx(1.0 - inside)
    assert table.n_samples == 20_000
    middle = len(table.centers) // 2
    assert abs(table.density[middle] - stats.norm.pdf(table.centers[middle])) <= 4 * table.stderr[middle]


def test_hitting_time_law():
    hits = sample_hitting_times(1.0, 1.0, 20_000, seed=5)
    assert np.mean(hits <= 1.0) == pytest.approx(2.0 * stats.norm.sf(1.0), abs=0.015)
    est = expected_boundary_value(lambda s: (s <= 2.0).astype(float), 1.0, 1.0, 1.0, 20_000, seed=5)
    assert est.mean == pytest.approx(2.0 * stats.norm.sf(1.0), abs=0.015)


def test_mean_estimate_needs_two_samples():
    with pytest.raises(SchemeError):
        mean_estimate([1.0])
