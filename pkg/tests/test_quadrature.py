from math import factorial

import numpy as np
import pytest

from flexohom.quadrature import MAX_DEGREE, gauss_legendre_01, triangle_quadrature


def exact_moment(a, b):
    # integral of l1^a l2^b over the unit reference triangle, divided by its area
    return 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 4, 8, 10, 14, 20, MAX_DEGREE])
def test_monomials_integrated_exactly(degree):
    rule = triangle_quadrature(degree)
    assert rule.degree >= degree
    x, y = rule.points[:, 1], rule.points[:, 2]
    for n in range(degree + 1):
        for a in range(n + 1):
            b = n - a
            got = np.sum(rule.weights * x**a * y**b)
            assert abs(got - exact_moment(a, b)) < 1e-13


@pytest.mark.parametrize("degree", [8, 12, 25])
def test_points_inside_and_weights_positive(degree):
    rule = triangle_quadrature(degree)
    assert np.all(rule.points >= -1e-14)
    np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-14)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 1.0) < 1e-14


def test_degree_zero_gives_a_valid_rule():
    rule = triangle_quadrature(0)
    assert abs(rule.weights.sum() - 1.0) < 1e-14


@pytest.mark.parametrize("degree", [-1, MAX_DEGREE + 1])
def test_unsupported_degree_rejected(degree):
    with pytest.raises(ValueError):
        triangle_quadrature(degree)


def test_scaled_weights_integrate_area():
    rule = triangle_quadrature(8)
    assert abs(rule.scaled(2.5).sum() - 2.5) < 1e-13
    assert len(rule) == len(rule.weights)


def test_gauss_legendre_on_unit_interval():
    s, w = gauss_legendre_01(4)
    for k in range(8):
        assert abs(np.sum(w * s**k) - 1.0 / (k + 1)) < 1e-15
