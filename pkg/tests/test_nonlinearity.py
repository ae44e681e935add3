import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from waves.errors import SignViolation, WavesError
from waves.nonlinearity import (VectorField, catalog, check_generic_pair, characteristic_zeros,
                                extend_nonlinearity, from_expressions, polynomial_pair, slope,
                                source_zeros, vector_field_F)

FIG = catalog("figure")


def test_F_at_characteristic_value():
    assert vector_field_F(FIG, 0.0, 0.0) == pytest.approx(16 * math.pi / 49, rel=1e-12)
    # the quotient just off the characteristic value approaches the same limit
    u = 1e-6
    assert float(FIG.g(u) / FIG.fp(u)) == pytest.approx(16 * math.pi / 49, rel=1e-6)


def test_F_off_characteristic_value():
    expected = math.sin(math.pi / 2) / (1.75 * math.sin(7 / 8))
    assert vector_field_F(FIG, 0.0, 0.5) == pytest.approx(expected, rel=1e-14)


def test_F_vanishes_at_zeros_of_g():
    assert vector_field_F(FIG, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert vector_field_F(FIG, 0.3, -1.0) == pytest.approx(0.0, abs=1e-15)


def test_F_is_continuous_across_switch():
    tau = 1e-7 * FIG.flux_slope_scale
    us = np.array([-2 * tau, -tau * 1.001, -tau * 0.999, 0.0, tau * 0.999, tau * 1.001, 2 * tau])
    vals = vector_field_F(FIG, 0.0, us)
    assert np.max(np.abs(np.diff(vals))) < 1e-6


def test_vector_field_taylor_matches_quotient():
    vf = VectorField(FIG, 0.0, [0.0])
    us = np.array([-0.3, -0.05, 0.02, 0.4])
    direct = FIG.g(us) / FIG.fp(us)
    assert np.allclose(vf.F(us), direct, rtol=1e-12)


def test_slope_examples():
    assert slope(FIG, 0.0, 1.0) == pytest.approx(1 - math.cos(1.75), abs=1e-14)
    oracle, _ = quad(lambda t: FIG.fp(t), 0.0, 1.0, epsabs=1e-14)
    assert slope(FIG, 0.0, 1.0) == pytest.approx(oracle, abs=1e-12)
    assert slope(FIG, 0.37, 0.37) == pytest.approx(float(FIG.fp(0.37)), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_slope_symmetric(a, b):
    assert slope(FIG, a, b) == pytest.approx(slope(FIG, b, a), rel=1e-12, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1e-5, 1e-5))
def test_slope_continuous_across_branch_switch(a, d):
    # the difference quotient and the quadrature agree near the switch width
    b = a + d
    if b == a:
        expected = float(FIG.fp(a))
    else:
        expected = quad(lambda t: FIG.fp(t), a, b, epsabs=1e-16)[0] / (b - a)
    assert slope(FIG, a, b) == pytest.approx(expected, abs=1e-8)


def test_catalog_derivatives_consistent():
    for name in ("figure", "figure-breaking", "burgers-cubic-source"):
        assert catalog(name).check_derivatives() == []


def test_unknown_catalog_entry():
    with pytest.raises(WavesError):
        catalog("nope")


def test_expression_pair_matches_catalog():
    nl = from_expressions("-cos(7/4*u)", "sin(pi*u)", (-1.2, 1.2))
    us = np.linspace(-1.2, 1.2, 31)
    for k in range(4):
        assert np.allclose(nl.df(k, us), FIG.df(k, us), atol=1e-12)
        assert np.allclose(nl.dg(k, us), FIG.dg(k, us), atol=1e-12)


def test_zeros():
    assert np.allclose(source_zeros(FIG), [-1.0, 0.0, 1.0], atol=1e-12)
    assert np.allclose(characteristic_zeros(FIG, 0.0), [0.0], atol=1e-9)


def test_generic_pair_figure():
    ok, pair = check_generic_pair(FIG, (-1.2, 1.2))
    assert ok and pair is None


def test_generic_pair_counterexample():
    # f' = sin(pi u) takes the same value at the unstable zeros 0 and 2 of g
    nl = from_expressions("-cos(pi*u)/pi", "sin(pi*u)", (-0.5, 2.5))
    ok, pair = check_generic_pair(nl)
    assert not ok
    assert np.allclose(pair, (0.0, 2.0), atol=1e-9)


def test_generic_pair_without_zeros():
    nl = polynomial_pair([0, 0, 0.5], [1.0, 0.0, 1.0], (-1, 1))
    assert check_generic_pair(nl) == (True, None)


@pytest.fixture(scope="module")
def extended():
    return extend_nonlinearity(FIG, *TestExtendNonlinearity.ARGS)


class TestExtendNonlinearity:
    ARGS = A2, A1, A, ALPHA = -0.9, -0.5, -0.2, -1.0

    def test_equal_above_a1(self, extended):
        us = np.linspace(self.A1, 1.2, 500)
        assert np.array_equal(extended.g(us), FIG.g(us))

    def test_endpoint_value_and_slope(self, extended):
        assert extended.g(self.A2) == pytest.approx(0.0, abs=1e-15)
        h = 1e-6
        fd = (extended.g(self.A2 + h) - extended.g(self.A2 - h)) / (2 * h)
        assert fd == pytest.approx(self.ALPHA, abs=1e-8)
        assert extended.gp(self.A2) == pytest.approx(self.ALPHA, abs=1e-12)

    def test_negative_between(self, extended):
        us = np.linspace(self.A2, self.A, 1001)[1:]
        assert np.all(extended.g(us) < 0)

    def test_derivatives_consistent(self, extended):
        # central differences of the high blend derivatives are only good to ~1e-5
        bad = extended.with_domain((self.A2 - 0.2, 0.9)).check_derivatives(rel_tol=1e-4)
        assert bad == []

    def test_rejects_positive_source(self):
        with pytest.raises(SignViolation):
            extend_nonlinearity(FIG, -0.9, 0.1, 0.5, -1.0)

    def test_rejects_bad_ordering(self):
        with pytest.raises(WavesError):
            extend_nonlinearity(FIG, -0.4, -0.5, -0.2, -1.0)
        with pytest.raises(WavesError):
            extend_nonlinearity(FIG, -0.9, -0.5, -0.2, 1.0)
