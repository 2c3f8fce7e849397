import math

import numpy as np
import pytest

from membrane.errors import SurfaceError
from membrane.model.surface import ON_TOLERANCE, Side, Surface, SurfaceKind


def test_point_distances_and_projection():
    s = Surface.point(0.5)
    x = np.array([[-1.0], [0.5], [2.0]])
    np.testing.assert_allclose(s.signed_distance(x), [-1.5, 0.0, 1.5])
    np.testing.assert_allclose(s.unsigned_distance(x), [1.5, 0.0, 1.5])
    np.testing.assert_allclose(s.project(x), 0.5)
    assert list(s.side(x)) == [Side.INTERIOR, Side.ON, Side.EXTERIOR]


def test_sphere_projection_of_center_picks_first_axis(circle):
    p = circle.project(np.zeros((1, 2)))
    np.testing.assert_allclose(p, [[1.0, 0.0]])


def test_sphere_normal_is_outward(circle):
    pts = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(circle.normal(pts), pts)


def test_normal_off_surface_raises(circle):
    with pytest.raises(SurfaceError):
        circle.normal(np.array([[0.5, 0.0]]))


def test_side_uses_scaled_tolerance():
    s = Surface.hyperplane([0.0, 1.0], offset=0.0)
    x = np.array([[1e6, 1e-7]])
    assert s.side(x)[0] == Side.EXTERIOR
    assert s.side(x, tolerance=ON_TOLERANCE)[0] == Side.ON


def test_hyperplane_needs_unit_normal():
    with pytest.raises(SurfaceError):
        Surface.hyperplane([1.0, 1.0])


def test_hyperplane_has_no_quadrature():
    with pytest.raises(SurfaceError):
        Surface.hyperplane([1.0, 0.0]).quadrature()


def test_sphere_validation():
    with pytest.raises(SurfaceError):
        Surface.sphere([0.0, 0.0], 0.0)
    with pytest.raises(SurfaceError):
        Surface(kind=SurfaceKind.POINT, dim=2)


@pytest.mark.parametrize("dim, area", [(2, 2.0 * math.pi * 1.5), (3, 4.0 * math.pi * 1.5**2)])
def test_sphere_quadrature_area(dim, area):
    s = Surface.sphere(np.zeros(dim), 1.5, quadrature_order=12)
    quad = s.quadrature()
    assert quad.area == pytest.approx(area, rel=1e-10)
    assert np.all(quad.weights > 0)
    np.testing.assert_allclose(s.unsigned_distance(quad.points), 0.0, atol=1e-12)


def test_reflect_to_sets_signed_distance(circle):
    x = np.array([[0.3, 0.4], [2.0, 0.0]])
    moved = circle.reflect_to(x, np.array([0.25, -0.1]))
    np.testing.assert_allclose(circle.signed_distance(moved), [0.25, -0.1], atol=1e-12)
