import numpy as np
import pytest

from membrane.model.coefficients import DiffusionSpec
from membrane.model.test_functions import erf_step, gaussian_bump
from membrane.pde.grid import Grid1D
from membrane.simulate.ensemble import run_ensemble
from membrane.simulate.scheme import SimScheme, SkewMode
from membrane.verify.consistency import (
    check_scheme_agreement,
    check_skew_neutrality,
    check_uniqueness_consistency,
    neutral_membrane,
)
from membrane.verify.reports import Verdict


def test_neutral_membrane(null_spec, skew_spec):
    assert neutral_membrane(null_spec)
    assert neutral_membrane(DiffusionSpec(dim=2, b=[1.0, 2.0]))
    assert not neutral_membrane(skew_spec)
    assert not neutral_membrane(DiffusionSpec(dim=1, r=1.0))
    assert not neutral_membrane(DiffusionSpec(dim=2, q=lambda z: 0.0 * z[..., 0]))


def test_skew_neutrality_on_the_line(point, null_spec, small_scheme):
    result = check_skew_neutrality(null_spec, point, [0.3], small_scheme, 4000)
    assert result.verdict is Verdict.PASS, result.statistics
    assert result.statistics["modes"] == ["crossing-resample", "mollified-drift"]
    assert result.statistics["seeds"][0] == small_scheme.seed
    assert result.statistics["seeds"][1] != small_scheme.seed
    assert result.statistics["budget"] >= 1.628 * np.sqrt(2 / 4000)


def test_skew_neutrality_reuses_a_crossing_ensemble(point, null_spec, small_scheme):
    ensemble = run_ensemble(null_spec, point, [0.0], small_scheme, 1000)
    result = check_skew_neutrality(null_spec, point, [0.0], small_scheme, 1000, ensemble=ensemble)
    assert result.statistics["n_paths"][0] == int(ensemble.valid.sum())
    assert result.statistics["seeds"][0] == small_scheme.seed


def test_skew_neutrality_needs_q_and_r_zero(point, skew_spec, small_scheme):
    result = check_skew_neutrality(skew_spec, point, [0.0], small_scheme, 10)
    assert result.verdict is Verdict.INCONCLUSIVE


@pytest.mark.slow
def test_skew_neutrality_on_a_circle(circle):
    spec = DiffusionSpec(dim=2, b=0.5)
    scheme = SimScheme(dt=2e-3, t_end=0.5, eps=0.02, seed=8, chunk_size=2000)
    result = check_skew_neutrality(spec, circle, [0.8, 0.0], scheme, 8000)
    assert result.verdict is Verdict.PASS, result.statistics


def test_wrong_skew_is_not_neutral(point, skew_spec, null_spec, small_scheme):
    # a skewed ensemble compared with the free one must be told apart
    skewed = run_ensemble(skew_spec, point, [0.0], small_scheme, 4000)
    result = check_skew_neutrality(null_spec, point, [0.0], small_scheme, 4000, ensemble=skewed)
    assert result.verdict is Verdict.FAIL, result.statistics


@pytest.mark.slow
def test_crossing_and_mollified_schemes_agree(point, skew_spec):
    scheme = SimScheme(dt=1e-3, t_end=1.0, eps=0.01, seed=3, chunk_size=5000)
    result = check_scheme_agreement(skew_spec, point, [0.0], scheme, 20_000, eps_drift=0.05)
    assert result.verdict is Verdict.PASS, result.statistics
    assert result.statistics["t"] == 1.0
    assert result.statistics["modes"] == ["crossing-resample", "mollified-drift"]


def test_scheme_agreement_starts_from_a_mollified_run(point, skew_spec, small_scheme):
    mollified = small_scheme.with_(skew_mode=SkewMode.MOLLIFIED_DRIFT, eps_drift=0.05)
    ensemble = run_ensemble(skew_spec, point, [0.0], mollified, 500)
    result = check_scheme_agreement(skew_spec, point, [0.0], mollified, 500, ensemble=ensemble)
    assert result.statistics["modes"] == ["crossing-resample", "mollified-drift"]


def test_scheme_agreement_is_inconclusive_for_total_skew(point, small_scheme):
    result = check_scheme_agreement(DiffusionSpec(dim=1, q=1.0), point, [0.0], small_scheme, 100)
    assert result.verdict is Verdict.INCONCLUSIVE
    assert "mollified" in result.statistics["reason"]


@pytest.mark.slow
def test_routes_agree_on_a_skew_membrane(point, skew_spec):
    # started on S with phi = 1{x > 0}: u(t, 0) = (1 + q) / 2 for every t
    scheme = SimScheme(dt=1e-3, t_end=1.0, eps=0.01, seed=42, chunk_size=5000)
    result = check_uniqueness_consistency(
        skew_spec,
        point,
        erf_step(0.0),
        np.array([0.0]),
        [1.0],
        scheme,
        20_000,
        Grid1D.line(0.02, 6.0, 2e-4, 1.0),
    )
    assert set(result.statistics["values"]) == {"monte-carlo", "pde", "potential"}
    assert result.passed, result.statistics["pairs"]
    for values in result.statistics["values"].values():
        assert values[0] == pytest.approx(0.75, abs=1e-2)


@pytest.mark.slow
def test_routes_agree_on_a_circle(circle):
    spec = DiffusionSpec(dim=2, q=0.3)
    scheme = SimScheme(dt=1e-3, t_end=0.5, eps=0.01, seed=17, chunk_size=5000)
    result = check_uniqueness_consistency(
        spec,
        circle,
        gaussian_bump(2, center=[0.0, 0.0], width=1.0),
        np.array([0.5, 0.0]),
        [0.5],
        scheme,
        10_000,
        Grid1D.radial(1.0, 0.02, 4.0, 2e-4, 0.5, dim=2),
    )
    assert set(result.statistics["values"]) == {"monte-carlo", "pde"}
    assert result.passed, result.statistics["pairs"]
