from math import factorial

import numpy as np
import pytest
from scipy import integrate

from porous_transmission.quadrature import CENTROID, SIX_POINT, THREE_POINT, gauss_legendre_01, singular_rule, subdivided_rule


def _reference_points(bary):
    # reference triangle (0,0), (1,0), (0,1): x = b1, y = b2
    return bary[:, 1], bary[:, 2]


def _monomial_average(a, b):
    # mean of x^a y^b over the reference triangle of area 1/2
    return 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("rule,degree", [(CENTROID, 1), (THREE_POINT, 2), (SIX_POINT, 4)])
def test_rules_exact_to_their_degree(rule, degree):
    bary, w = rule
    assert np.isclose(w.sum(), 1.0)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0)
    x, y = _reference_points(bary)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            assert np.isclose(np.sum(w * x**a * y**b), _monomial_average(a, b), rtol=1e-12, atol=1e-14)


def test_subdivided_rule_weights_and_exactness():
    bary, w = subdivided_rule(2)
    assert len(w) == 6 * 16
    x, y = _reference_points(bary)
    assert np.isclose(np.sum(w * x**3 * y), _monomial_average(3, 1), rtol=1e-12)


def test_gauss_legendre_on_unit_interval():
    x, w = gauss_legendre_01(6)
    assert np.isclose(w.sum(), 1.0)
    assert np.isclose(np.sum(w * x**11), 1.0 / 12.0, rtol=1e-13)


@pytest.mark.parametrize("beta", [[1 / 3, 1 / 3, 1 / 3], [0.6, 0.3, 0.1], [0.1, 0.1, 0.8]])
def test_singular_rule_integrates_inverse_distance(beta):
    beta = np.array(beta)
    bary, w = singular_rule(beta[None, :], order=12)
    bary, w = bary[0], w[0]
    assert np.isclose(w.sum(), 1.0)
    px, py = beta[1], beta[2]
    x, y = _reference_points(bary)
    got = np.sum(w / np.hypot(x - px, y - py))
    # independent adaptive cubature, split at the singular point's abscissa
    f = lambda yy, xx: 1.0 / np.hypot(xx - px, yy - py)
    parts = [integrate.dblquad(f, lo, hi, 0, lambda xx: 1 - xx, epsabs=1e-12, epsrel=1e-12)[0]
             for lo, hi in ((0, px), (px, 1))]
    ref = 2.0 * sum(parts)  # mean over the triangle of area 1/2
    assert np.isclose(got, ref, rtol=1e-6)
