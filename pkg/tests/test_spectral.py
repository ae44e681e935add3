import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waves import fixtures
from waves.classify import spectral_report
from waves.errors import GridTooCoarse, SpectralSide
from waves.spectral import (GridFunction, Resolvent, adjoint_ladder, apply_L, default_coefficient,
                            equivalence_constants, key_derivative_identity_check, ladder_matrix,
                            profile_taylor, project_zero_mode, resolvent_solve, star_norm, theta_a_k,
                            weight_chi, weyl_expected_rate, weyl_quotient)

FRONT = fixtures.figure_front()


# ---------------------------------------------------------------- the operator

def kernel_residual(h):
    nl, pr = FRONT
    xs = np.arange(-6, 6 + h / 2, h)
    out, _ = apply_L(pr, nl, GridFunction(xs, pr(xs, 1)))
    return float(np.max(np.abs(out.values)))


def test_translation_mode_in_kernel():
    coarse, fine = kernel_residual(0.02), kernel_residual(0.01)
    assert fine <= 1e-6
    # fourth-order differences: halving h divides the residual by about 16
    assert 10 <= coarse / fine <= 24


def test_apply_L_is_linear(figure_composites):
    nl, comps = figure_composites
    pr = comps["double"]
    xs = np.linspace(-6, 6, 1200)
    xs = xs[np.min(np.abs(xs[:, None] - pr.positions[None, :]), axis=1) > 1e-3]
    w1 = GridFunction(xs, np.exp(-xs ** 2))
    w2 = GridFunction(xs, np.sin(xs) / (1 + xs ** 2))
    y1, y2 = np.array([0.3, -1.0]), np.array([2.0, 0.5])
    o1, j1 = apply_L(pr, nl, w1, y1)
    o2, j2 = apply_L(pr, nl, w2, y2)
    o, j = apply_L(pr, nl, GridFunction(xs, 2 * w1.values - 3 * w2.values), 2 * y1 - 3 * y2)
    assert np.allclose(o.values, 2 * o1.values - 3 * o2.values, atol=1e-10)
    assert np.allclose(j, 2 * j1 - 3 * j2, atol=1e-10)


def test_jump_eigenvalue_for_pure_shift(figure_composites):
    nl, comps = figure_composites
    pr = comps["single-left"]
    xs = np.linspace(-6, 6, 1201)
    xs = xs[np.abs(xs - pr.positions[0]) > 1e-3]
    _, jy = apply_L(pr, nl, GridFunction(xs, np.zeros_like(xs)), [1.0])
    assert jy[0] == pytest.approx(spectral_report(pr, nl).jump_eigenvalues[0]["eigenvalue"], rel=1e-12)


def test_grid_on_jump_rejected(figure_composites):
    nl, comps = figure_composites
    pr = comps["single-left"]
    xs = np.sort(np.concatenate([np.linspace(-6, 6, 101), pr.positions]))
    with pytest.raises(GridTooCoarse):
        apply_L(pr, nl, GridFunction(xs, np.zeros_like(xs)))


# ---------------------------------------------------------------- Weyl functions

def test_weyl_quotient_homogeneous():
    nl, pr = FRONT
    base = weyl_quotient(pr, nl, 1.0, 0.05)
    assert weyl_quotient(pr, nl, 1.0, 0.05, amplitude=7.0) == pytest.approx(base, rel=1e-12)
    assert weyl_quotient(pr, nl, 1.0, 0.05, 2.0, 2.0, amplitude=7.0) == \
        pytest.approx(weyl_quotient(pr, nl, 1.0, 0.05, 2.0, 2.0), rel=1e-12)


def test_weyl_quotient_off_spectrum_stays_bounded_below():
    nl, pr = FRONT
    eps = [0.2, 0.1, 0.05, 0.02]
    on = [weyl_quotient(pr, nl, 1.0, e) for e in eps]
    off = [weyl_quotient(pr, nl, 1.0, e, lam_shift=1.0) for e in eps]
    assert on[-1] < 0.15 * on[0]
    assert min(off) > 0.1 * off[0]


def test_weyl_expected_rates():
    assert weyl_expected_rate(math.inf, math.inf) == 1.0
    assert weyl_expected_rate(2.0, 2.0) == 1.0
    assert weyl_expected_rate(1.0, math.inf) == 0.0


# ---------------------------------------------------------------- Taylor data and ladders

def test_profile_taylor_against_differences():
    nl, pr = FRONT
    p, a, b = profile_taylor(pr, nl, 0.0, 3)
    h = 1e-3
    d1 = lambda x: pr(x, 1)
    assert p[1] == pytest.approx(16 * math.pi / 49, rel=1e-10)
    assert p[2] == pytest.approx((d1(h) - d1(-h)) / (2 * h), abs=1e-6)
    assert p[3] == pytest.approx((d1(h) - 2 * d1(0.0) + d1(-h)) / h ** 2, rel=1e-5)
    assert a[1] == pytest.approx(math.pi, rel=1e-10)
    assert b[0] == pytest.approx(math.pi, rel=1e-12)


def test_ladder_base_case():
    nl, pr = FRONT
    lad = adjoint_ladder(pr, nl, 0)
    assert lad.coefficients == [1.0]
    assert lad.eigenvalue == 0.0


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_ladder_solves_triangular_system(ell):
    nl, pr = FRONT
    lad = adjoint_ladder(pr, nl, ell)
    M = ladder_matrix(lad.a_taylor, lad.b_taylor, lad.eigenvalue, ell)
    signed = np.array([(-1) ** j * c for j, c in enumerate(lad.coefficients)])
    # the pairing with phi^(m)(x*) vanishes for every m
    assert np.max(np.abs(signed @ M)) <= 1e-12 * max(1.0, np.max(np.abs(M)))
    assert lad.coefficients[-1] == 1.0


@settings(max_examples=10, deadline=None)
@given(st.floats(-5, 5))
def test_ladder_translation_equivariant(c):
    nl, pr = FRONT
    base, moved = adjoint_ladder(pr, nl, 2), adjoint_ladder(pr.translate(c), nl, 2)
    assert moved.x_star == pytest.approx(base.x_star + c, abs=1e-12)
    assert moved.coefficients == pytest.approx(base.coefficients, rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------- weights

@pytest.mark.parametrize("k", [0, 1, 2])
def test_weight_vanishes_at_characteristic_point(k):
    nl, pr = FRONT
    w = weight_chi(pr, nl, k)
    assert w(0.0) == 0.0
    assert w.integral(0.0) == pytest.approx(0.0, abs=1e-12)
    xs = np.linspace(-10, 10, 2001)
    assert np.all(w(xs[xs > 0]) >= 0) and np.all(w(xs[xs < 0]) <= 0)


def test_theta_a_k_scales_with_coefficient():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    w = weight_chi(pr, nl, 1)
    base = theta_a_k(pr, nl, w, a, da, w.grid)
    assert base == pytest.approx(w.theta, rel=1e-10)
    scaled = theta_a_k(pr, nl, w, lambda x: 1.5 * a(x), lambda x: 1.5 * da(x), w.grid)
    assert scaled == pytest.approx(1.5 * base, rel=1e-12)


# ---------------------------------------------------------------- resolvent

def test_resolvent_of_zero():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    xs = np.linspace(-5, 5, 41)
    v, info = resolvent_solve(pr, nl, a, da, 1, 1.0 + 0.5j, lambda x: 0 * x, xs)
    assert np.all(v == 0)
    assert info["contraction"]


def test_resolvent_inverts_apply():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    res = Resolvent(pr, nl, a, da, 1, 2.0)
    w = lambda x: np.exp(-x ** 2)
    dw = lambda x: -2 * x * np.exp(-x ** 2)
    xs = np.linspace(-3, 3, 25)
    back = res.solve(lambda y: res.apply(w, dw, y), xs)
    assert np.max(np.abs(back - w(xs))) <= 1e-8


def test_resolvent_rejects_left_half():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    with pytest.raises(SpectralSide):
        resolvent_solve(pr, nl, a, da, 1, -4.0, lambda x: 0 * x, np.zeros(1))


# ---------------------------------------------------------------- star norm and projector

def test_star_norm_of_zero():
    nl, pr = FRONT
    xs = np.linspace(-10, 10, 1001)
    assert star_norm(pr, nl, lambda x: 0 * x, lambda x: 0 * x, xs) == 0.0


def test_star_norm_vanishes_on_translation_mode():
    nl, pr = FRONT
    xs = np.linspace(-10, 10, 1001)
    assert star_norm(pr, nl, lambda x: pr(x, 1), lambda x: pr(x, 2), xs) <= 1e-8


def test_equivalence_constants_bound_random_ratios():
    nl, pr = FRONT
    lower, upper, info = equivalence_constants(pr, nl)
    assert 0 < lower <= upper
    xs = np.linspace(-20, 20, 20001)
    rng = np.random.default_rng(6)
    for _ in range(20):
        al, be = rng.uniform(0.3, 3), rng.uniform(0.05, 1)
        v = lambda x: np.sin(al * x) * np.exp(-be * x ** 2)
        dv = lambda x: (al * np.cos(al * x) - 2 * be * x * np.sin(al * x)) * np.exp(-be * x ** 2)
        ratio = star_norm(pr, nl, v, dv, xs) / max(np.max(np.abs(v(xs))), np.max(np.abs(dv(xs))))
        assert lower <= ratio <= upper


def test_projector():
    nl, pr = FRONT
    xs = np.linspace(-8, 8, 1601)
    A = GridFunction(xs, np.cos(xs) + xs ** 2)
    P = project_zero_mode(pr, A)
    assert P.values[800] == pytest.approx(1.0)
    assert np.allclose(project_zero_mode(pr, P).values, P.values, atol=1e-14)
    mode = GridFunction(xs, pr(xs, 1))
    assert np.allclose(project_zero_mode(pr, mode).values, mode.values, atol=1e-14)
    B = GridFunction(xs, np.sin(xs + 1))
    combo = project_zero_mode(pr, GridFunction(xs, 2 * A.values + B.values)).values
    assert np.allclose(combo, 2 * P.values + project_zero_mode(pr, B).values, atol=1e-13)


def test_projector_off_grid_point():
    nl, pr = FRONT
    xs = np.linspace(-8.05, 7.95, 161)
    A = GridFunction(xs, 3 + xs + xs ** 2)
    assert project_zero_mode(pr, A).values == pytest.approx(3 * pr(xs, 1) / pr(0.0, 1), rel=1e-10)


# ---------------------------------------------------------------- derivative identity

def test_key_identity_second_order():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    v = lambda x: np.sin(x) * np.exp(-x ** 2 / 4)
    e1 = key_derivative_identity_check(pr, nl, a, da, v, 1e-2)
    e2 = key_derivative_identity_check(pr, nl, a, da, v, 5e-3)
    assert 3.5 <= e1 / e2 <= 4.5


def test_key_identity_on_translation_mode():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    assert key_derivative_identity_check(pr, nl, a, da, lambda x: pr(x, 1), 1e-3) <= 1e-7


def random_bumps(rng):
    c, m, s = rng.normal(size=3), rng.uniform(-3, 3, 3), rng.uniform(0.7, 2, 3)
    return lambda x: sum(ci * np.exp(-(x - mi) ** 2 / (2 * si ** 2)) for ci, mi, si in zip(c, m, s))


def test_key_identity_random_draws_follow_h_squared():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = random_bumps(rng)
        e1 = key_derivative_identity_check(pr, nl, a, da, v, 2e-3)
        e2 = key_derivative_identity_check(pr, nl, a, da, v, 1e-3)
        assert 3.5 <= e1 / e2 <= 4.5


@pytest.mark.xfail(strict=True, reason="second-order truncation constant exceeds one for unit-scale data")
def test_key_identity_random_draws_below_1e_6():
    nl, pr = FRONT
    a, da = default_coefficient(pr, nl)
    rng = np.random.default_rng(3)
    worst = max(key_derivative_identity_check(pr, nl, a, da, random_bumps(rng), 1e-3) for _ in range(5))
    assert worst <= 1e-6
