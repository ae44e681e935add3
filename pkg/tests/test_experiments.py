import math

import numpy as np
import pytest
from scipy.optimize import brentq

from waves import fixtures
from waves.classify import spectral_report
from waves.errors import MultipleRoots, WavesError
from waves.experiments import (bump_perturbation, charpoint_eps, locate_characteristic_point,
                               pinned_positions, proof_delta0, proof_eta, run_experiment_composite,
                               run_experiment_infinity, run_experiment_shock,
                               run_experiment_small_shock, run_experiment_weyl,
                               small_shock_asymptote, small_shock_perturbation)
from waves.fitting import fit_rate
from waves.sim import Perturbation


def rows(res):
    return {r["quantity"]: r for r in res.table}


# ---------------------------------------------------------------- pinned characteristic point

def test_locate_zero_perturbation(figure_front):
    _, pr = figure_front
    assert locate_characteristic_point(pr, Perturbation()) == 0.0


@pytest.mark.parametrize("c", [1e-4, -3e-4, 1e-3])
def test_locate_constant_shift(figure_front, c):
    nl, pr = figure_front
    pert = Perturbation(lambda x: 0 * x + c, lambda x: 0 * x)
    x = locate_characteristic_point(pr, pert)
    oracle = brentq(lambda y: pr(y) + c, -1, 1, xtol=1e-15)
    assert x == pytest.approx(oracle, abs=1e-12)
    # first order in c, with a quadratic remainder
    assert abs(x + c / (16 * math.pi / 49)) <= 10 * c ** 2


def test_locate_rejects_large_perturbation(figure_front):
    _, pr = figure_front
    with pytest.raises(MultipleRoots):
        locate_characteristic_point(pr, Perturbation(lambda x: np.sin(6 * x), lambda x: 6 * np.cos(6 * x)))


def test_pinned_positions_on_family(family_wave):
    _, pr = family_wave
    assert pinned_positions(pr, Perturbation()) == pytest.approx([x for x, _ in pr.characteristic_points])


# ---------------------------------------------------------------- instability at infinity

def test_infinity_time_grows_by_log_two_when_eps_halves():
    nl, pr = fixtures.infinity_wave()
    a = run_experiment_infinity(nl, pr, 0.1)
    b = run_experiment_infinity(nl, pr, 0.05)
    expected = 2 * math.log(2) / a.params["rate"]
    assert b.params["T_eps"] - a.params["T_eps"] == pytest.approx(expected, rel=0.02)
    assert a.params["T_eps_halved_increment"] == pytest.approx(expected, rel=1e-12)
    assert a.passed and b.passed


def test_proof_delta0_satisfies_its_bound():
    nl = fixtures.infinity_wave()[0]
    d = proof_delta0(nl, 0.0, math.pi)
    us = np.linspace(-8 * d, 8 * d, 801)
    assert d > 0
    assert math.exp(d / math.pi * np.max(np.abs(nl.gpp(us)))) <= 2.0 + 1e-12


# ---------------------------------------------------------------- wave breaking

def test_charpoint_eps_inverts_ratio():
    from waves.smooth import BUMP_SUP
    eps = charpoint_eps(0.1)
    assert eps * abs(math.log(eps)) * BUMP_SUP == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(WavesError):
        charpoint_eps(10.0)


# ---------------------------------------------------------------- unstable jump

def test_shock_offset_sign_symmetry():
    nl, pr = fixtures.unstable_shock()
    eta = proof_eta(nl, pr, 0)
    plus = run_experiment_shock(nl, pr, eta / 100, simulate=False)
    minus = run_experiment_shock(nl, pr, -eta / 100, simulate=False)
    assert np.all(plus.series["psi"] > 0) and np.all(minus.series["psi"] < 0)
    assert abs(minus.fits["psi"].rate) == pytest.approx(abs(plus.fits["psi"].rate), rel=0.05)
    assert plus.passed and minus.passed


def test_shock_offset_too_large_for_fit():
    nl, pr = fixtures.unstable_shock()
    eta = proof_eta(nl, pr, 0)
    res = run_experiment_shock(nl, pr, eta / 2, simulate=False)
    assert not rows(res)["growth rate"]["pass"]


def test_shock_offset_must_be_small():
    nl, pr = fixtures.unstable_shock()
    with pytest.raises(WavesError):
        run_experiment_shock(nl, pr, 1.0, simulate=False)


# ---------------------------------------------------------------- small shock on a front

@pytest.fixture(scope="module")
def small_shock_runs():
    nl, pr = fixtures.burgers_front()
    return nl, pr, {a: run_experiment_small_shock(nl, pr, small_shock_perturbation(pr, nl, -2.0, a), -2.0)
                    for a in (1e-3, 1e-2)}


def test_small_shock_asymptote_bounded_by_perturbation(small_shock_runs):
    nl, pr, runs = small_shock_runs
    C = {a: abs(r.params["phi_inf"] - r.params["phi_inf_0"]) / a for a, r in runs.items()}
    # the constant does not drift between the two sizes
    assert 0.5 <= C[1e-2] / C[1e-3] <= 2.0
    assert rows(runs[1e-3])["|phi_inf - phi_inf^0|"]["pass"]


def test_small_shock_entropy_sign_and_gap_equation(small_shock_runs):
    _, _, runs = small_shock_runs
    for res in runs.values():
        w = res.series["w"]
        assert np.all(np.sign(w) == np.sign(w[0]))
        r = rows(res)
        assert r["w' matches the explicit right-hand side"]["measured"] <= 1e-6
        assert r["RH residual"]["pass"]


def test_small_shock_perturbation_is_entropic():
    nl, pr = fixtures.burgers_front()
    pert = small_shock_perturbation(pr, nl, -2.0, 1e-3)
    ul = pr(-2.0) + pert.value(np.array([-2.0 - 1e-12]))[0]
    ur = pr(-2.0) + pert.value(np.array([-2.0 + 1e-12]))[0]
    assert nl.fp(ul) > nl.fp(ur)
    assert abs(ul - ur) == pytest.approx(1e-3, rel=1e-9)


def test_small_shock_asymptote_side_symmetry():
    # tanh front with f = u^2/2 is odd, so the limit phase is odd in delta0
    nl, pr = fixtures.burgers_front()
    assert small_shock_asymptote(nl, pr, 2.0) == pytest.approx(-small_shock_asymptote(nl, pr, -2.0), abs=1e-10)


# ---------------------------------------------------------------- composites

def test_composite_zero_perturbation_is_identity():
    nl, pr = fixtures.double_composite()
    res = run_experiment_composite(nl, pr, None, dt=5e-3, h=0.002)
    assert np.max(res.series["shape"]) <= 1e-9


def test_double_composite_decay_rate():
    nl, pr = fixtures.double_composite()
    res = run_experiment_composite(nl, pr, bump_perturbation(1e-3, 0.2, 0.3), T=10.0)
    theta = spectral_report(pr, nl).theta
    assert abs(-res.fits["shape"].rate - theta) <= 0.15 * theta
    assert res.passed


def test_composite_rejects_inconsistent_shift(family_wave):
    from waves.profile import FamilyShift
    nl, pr = family_wave
    psi = tuple(x + 0.1 for x, _ in pr.characteristic_points)
    with pytest.raises(WavesError):
        run_experiment_composite(nl, pr, None, shift=FamilyShift(psi), T=0.1)


# ---------------------------------------------------------------- fitting and Weyl

def test_fit_rate_recovers_exponential():
    t = np.linspace(0, 5, 101)
    fit = fit_rate(t, 3 * np.exp(-1.7 * t))
    assert fit.rate == pytest.approx(-1.7, abs=1e-12)
    assert fit.window == (1.5, 4.5)
    with pytest.raises(ValueError):
        fit_rate(t, np.zeros_like(t))


def test_weyl_experiment_records_windows(figure_front):
    nl, pr = figure_front
    res = run_experiment_weyl(nl, pr)
    assert res.passed
    assert len(res.series["eps"]) == 8
