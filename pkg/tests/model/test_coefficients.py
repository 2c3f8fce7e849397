import numpy as np
import pytest

from membrane.errors import CoefficientError
from membrane.model.coefficients import DiffusionSpec, SurfaceField, TabulatedMatrix


def test_scalar_b_is_isotropic():
    spec = DiffusionSpec(dim=2, b=2.0, C1=1.0, C2=3.0)
    assert spec.is_constant
    assert spec.isotropic_variance() == pytest.approx(2.0)
    np.testing.assert_allclose(spec.sqrt_b(np.zeros(2)) @ spec.sqrt_b(np.zeros(2)), 2.0 * np.eye(2))


def test_anisotropic_b_refuses_isotropic_variance():
    spec = DiffusionSpec(dim=2, b=[[2.0, 0.0], [0.0, 1.0]], C1=1.0, C2=2.0)
    with pytest.raises(CoefficientError):
        spec.isotropic_variance()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"C1": 2.0, "C2": 1.0},
        {"L": -1.0},
    ],
)
def test_invalid_constants(kwargs):
    with pytest.raises(CoefficientError):
        DiffusionSpec(dim=1, **kwargs)


def test_surface_field_constant_and_callable():
    c = SurfaceField(0.3)
    assert c.is_constant and c.constant == 0.3
    np.testing.assert_allclose(c(np.zeros((4, 2))), 0.3)
    f = SurfaceField(lambda p: p[..., 0])
    assert not f.is_constant
    with pytest.raises(CoefficientError):
        f.constant
    np.testing.assert_allclose(f(np.array([[1.0, 0.0], [-1.0, 0.0]])), [1.0, -1.0])


def test_tabulated_angle_is_periodic():
    field = SurfaceField.tabulated_angle([0.0, np.pi], [0.0, 1.0])
    np.testing.assert_allclose(field(np.array([[0.0, 1.0]])), [0.5])
    np.testing.assert_allclose(field(np.array([[0.0, -1.0]])), [0.5])


def test_tabulated_matrix_is_flat_outside():
    b = TabulatedMatrix([-1.0, 1.0], [1.0, 2.0])
    spec = DiffusionSpec(dim=1, b=b, C1=1.0, C2=2.0, L=1.0)
    np.testing.assert_allclose(spec.b_at(np.array([[-5.0], [0.0], [5.0]]))[:, 0, 0], [1.0, 1.5, 2.0])


def test_skew_ratio_needs_positive_r(point):
    spec = DiffusionSpec(dim=1, q=0.5, r=0.0)
    with pytest.raises(CoefficientError):
        spec.skew_ratio(np.zeros((1, 1)))
    sticky = DiffusionSpec(dim=1, q=0.5, r=2.0)
    np.testing.assert_allclose(sticky.skew_ratio(np.zeros((1, 1))), 0.25)
