import numpy as np

from membrane.model.coefficients import DiffusionSpec, SurfaceField
from membrane.model.conditions import validate_conditions_J


def test_identity_passes(point):
    report = validate_conditions_J(DiffusionSpec(dim=1), point)
    assert report.passed
    assert report.failures == []


def test_ellipticity_violation_has_witness():
    spec = DiffusionSpec(dim=2, b=[[3.0, 0.0], [0.0, 1.0]], C1=1.0, C2=2.0)
    report = validate_conditions_J(spec)
    assert not report.passed
    assert any("upper ellipticity" in f for f in report.failures)
    witness = report.witnesses["ellipticity_max"]
    assert witness.value == 3.0
    np.testing.assert_allclose(witness.other, [1.0, 0.0])


def test_holder_violation_found_by_scan():
    spec = DiffusionSpec(dim=1, b=lambda x: (1.5 + 0.5 * np.tanh(50.0 * x[..., 0]))[..., None, None], C1=1.0, C2=2.0, L=1.0)
    report = validate_conditions_J(spec)
    assert not report.passed
    assert report.witnesses["holder"].value > 1.0


def test_q_out_of_range_on_circle(circle):
    spec = DiffusionSpec(dim=2, q=SurfaceField(lambda p: 2.0 * p[..., 0]))
    report = validate_conditions_J(spec, circle, n_samples=256)
    assert not report.passed
    assert any("|q|" in f for f in report.failures)


def test_report_is_deterministic_in_seed(circle):
    spec = DiffusionSpec(dim=2, q=SurfaceField(lambda p: 0.5 * p[..., 1]))
    a = validate_conditions_J(spec, circle, n_samples=128, seed=3).to_dict()
    b = validate_conditions_J(spec, circle, n_samples=128, seed=3).to_dict()
    assert a == b
