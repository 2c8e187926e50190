import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eeplan import specfun
from eeplan.errors import DomainError

# Reference values below were computed once with mpmath at 40 digits.
MP_UPSILON = [
    (3.5, 10**0.5, 2.6519499880223625517),
    (4.0, 1.0, 0.78539816339744830962),
    (2.5, 10.0, 26.020492094280949718),
    (6.5, 10**1.5, 2.4067992844449474671),
    (3.0, 0.1, 0.1952671374379260562),
]
MP_LOGGAMMA = [
    (0.1, 2.252712651734205902),
    (1.5, -0.12078223763524522235),
    (3.7, 1.4280723266653881292),
    (12.25, 18.115669505710892619),
    (171.3, 708.11494703899688273),
]


def test_2f1_at_origin_is_one():
    assert specfun.gauss_2f1_neg(0.3, -1.7, 2.5, 0.0) == 1.0


def test_2f1_quarter_pi_identity():
    assert specfun.gauss_2f1_neg(-0.5, 1.0, 0.5, -1.0) == pytest.approx(1 + math.pi / 4, abs=1e-12)


@pytest.mark.parametrize(
    "a,b,c,z,expected",
    [
        (0.3, 1.7, 2.2, -0.3, 0.93999834263499984653),
        (0.3, 1.7, 2.2, -7.0, 0.58394591284874639574),
        (-1.2, 0.5, 1.5, -40.0, 26.457985339201732167),
    ],
)
def test_2f1_generic_against_mpmath_values(a, b, c, z, expected):
    assert specfun.gauss_2f1_neg(a, b, c, z) == pytest.approx(expected, rel=1e-11)


def test_2f1_reference_point_matches_quadrature():
    v = specfun.gauss_2f1_neg(-2 / 3.5, 1.0, 1 - 2 / 3.5, -(10**0.5))
    assert abs(v - (1 + specfun.upsilon_quad(3.5, 10**0.5))) <= 1e-9


def test_2f1_rejects_bad_arguments():
    with pytest.raises(DomainError):
        specfun.gauss_2f1_neg(1.0, 1.0, -2.0, -0.5)
    with pytest.raises(DomainError):
        specfun.gauss_2f1_neg(1.0, 1.0, 2.0, 0.5)


@pytest.mark.parametrize("beta,gamma,expected", MP_UPSILON)
def test_upsilon_against_mpmath_values(beta, gamma, expected):
    assert specfun.upsilon(beta, gamma) == pytest.approx(expected, rel=1e-12)


def test_upsilon_zero_threshold():
    assert specfun.upsilon(3.5, 0.0) == 0.0
    assert specfun.upsilon_quad(3.5, 0.0) == 0.0


def test_upsilon_domain():
    with pytest.raises(DomainError):
        specfun.upsilon(2.0, 1.0)
    with pytest.raises(DomainError):
        specfun.upsilon(3.0, -1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(2.2, 8.0), st.floats(-15.0, 40.0))
def test_upsilon_series_matches_quadrature(beta, gamma_db):
    gamma = 10 ** (gamma_db / 10)
    series = specfun.upsilon(beta, gamma)
    quad = specfun.upsilon_quad(beta, gamma)
    assert abs(series - quad) <= 1e-9 * max(1.0, quad)


@settings(max_examples=40, deadline=None)
@given(st.floats(2.2, 8.0), st.floats(-10.0, 30.0), st.floats(0.01, 3.0))
def test_upsilon_increases_with_threshold(beta, gamma_db, step_db):
    lo = specfun.upsilon(beta, 10 ** (gamma_db / 10))
    hi = specfun.upsilon(beta, 10 ** ((gamma_db + step_db) / 10))
    assert hi > lo


def test_integrate_polynomial_and_failure():
    assert specfun.integrate(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)
    assert specfun.integrate(math.sqrt, 0.0, 1.0) == pytest.approx(2 / 3, abs=1e-12)
    with pytest.raises(Exception):
        specfun.integrate(lambda x: 1 / x, 0.0, 1.0, max_intervals=50)


@pytest.mark.parametrize("x,expected", [(1.0, 0.0), (2.0, 0.0), (0.5, math.log(math.sqrt(math.pi)))])
def test_log_gamma_identities(x, expected):
    assert specfun.log_gamma(x) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("x,expected", MP_LOGGAMMA)
def test_log_gamma_against_mpmath_values(x, expected):
    assert specfun.log_gamma(x) == pytest.approx(expected, rel=1e-13, abs=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e4))
def test_log_gamma_matches_stdlib(x):
    assert specfun.log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)


def test_log_gamma_array_and_domain():
    xs = np.array([0.5, 1.0, 5.0])
    np.testing.assert_allclose(specfun.log_gamma(xs), [math.lgamma(x) for x in xs], rtol=1e-13)
    with pytest.raises(DomainError):
        specfun.log_gamma(0.0)


def test_shorthands_reference_constants():
    kappa = (4 * math.pi * 7) ** 2
    short = specfun.shorthands(3.5, kappa, 20e6, 10 ** (-20.4), 10**0.5, 10**0.5)
    sigma = 20e6 * 10 ** (-20.4)
    assert short.sigma_n2 == pytest.approx(sigma, rel=1e-15)
    assert short.eta == pytest.approx(kappa * sigma * 10**0.5, rel=1e-15)
    assert short.eta == pytest.approx(1.948e-9, rel=1e-3)
