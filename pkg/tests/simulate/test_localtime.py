import numpy as np
import pytest

from membrane.simulate.localtime import band_fraction, estimate_eta, estimate_eta_extrapolated
from membrane.simulate.paths import PathBundle


@pytest.mark.parametrize(
    "a, b, eps, expected",
    [
        (-1.0, 1.0, 0.5, 0.5),
        (0.2, 0.2, 0.5, 1.0),
        (0.7, 0.7, 0.5, 0.0),
        (1.0, 2.0, 0.5, 0.0),
        (0.0, 1.0, 0.25, 0.25),
    ],
)
def test_band_fraction(a, b, eps, expected):
    assert band_fraction(a, b, eps) == pytest.approx(expected)


def _bundle(states, dt=0.1, crossed=None):
    states = np.asarray(states, dtype=float)
    return PathBundle(
        path_ids=np.arange(states.shape[0]),
        base_times=dt * np.arange(states.shape[1]),
        base_states=states,
        crossed=crossed,
    )


def test_eta_on_the_membrane_grows_at_rate_one_over_two_eps(point):
    path = _bundle(np.zeros((1, 5)))
    eta = estimate_eta(path, point, eps=0.05)
    np.testing.assert_allclose(eta[0], np.arange(5) * 0.1 / 0.1)


def test_eta_is_zero_far_from_s_and_nondecreasing(point):
    rng = np.random.default_rng(0)
    path = _bundle(np.cumsum(0.1 * rng.standard_normal((20, 50)), axis=1))
    eta = estimate_eta(path, point, eps=0.02)
    assert np.all(np.diff(eta, axis=1) >= 0)
    assert np.all(eta[:, 0] == 0)
    far = _bundle(np.full((1, 5), 3.0))
    np.testing.assert_allclose(estimate_eta(far, point, eps=0.1), 0.0)


def test_recorded_crossing_is_unfolded(point):
    # The resampled side hides the crossing; the flag restores it.
    path = _bundle([[-0.1, -0.1]], dt=1.0, crossed=np.array([[True]]))
    eta = estimate_eta(path, point, eps=0.05)
    assert eta[0, 1] == pytest.approx(0.5 / 0.1)


def test_eta_rejects_nonpositive_band(point):
    with pytest.raises(ValueError):
        estimate_eta(_bundle(np.zeros((1, 3))), point, eps=0.0)


def test_extrapolated_eta_is_nondecreasing(point):
    rng = np.random.default_rng(1)
    path = _bundle(np.cumsum(0.05 * rng.standard_normal((10, 40)), axis=1))
    eta = estimate_eta_extrapolated(path, point, eps=0.04)
    assert np.all(np.diff(eta, axis=1) >= 0)
    assert np.all(eta >= 0)
