"""Reference waves used by the experiments, the CLI and the tests."""
from __future__ import annotations

import math

from numpy.polynomial import polynomial as P

from .nonlinearity import Nonlinearity, catalog, polynomial_pair
from .profile import (PRECISE, WaveProfile, build_chain, build_composite, build_constant,
                      build_front, build_riemann, build_smooth)


def figure_front(opts=PRECISE):
    nl = catalog("figure")
    return nl, build_front(nl, -1.0, 0.0, 1.0, opts=opts)


# the composites jump from the zeros -3 and 3 of g onto the front
WIDE = (-3.5, 3.5)


def figure_classes(opts=PRECISE) -> dict:
    """The five stable shapes for f=-cos(7u/4), g=sin(pi u) with speed 0."""
    nl = catalog("figure", WIDE)
    return nl, {
        "Constant": build_constant(nl, 1.0, 0.0),
        "RiemannShock": build_riemann(nl, 1.0, -1.0),
        "ContinuousFront": build_front(nl, -1.0, 0.0, 1.0, opts=opts),
        "SingleJumpComposite": build_composite(nl, "single-left", -3.0, 0.0, 1.0, opts=opts),
        "DoubleJumpComposite": build_composite(nl, "double", -3.0, 0.0, 3.0, opts=opts),
    }


def figure_composites(opts=PRECISE) -> dict:
    """The three composite shapes: jump on the left, jump on the right, both."""
    nl = catalog("figure", WIDE)
    return nl, {
        "single-left": build_composite(nl, "single-left", -3.0, 0.0, 1.0, opts=opts),
        "single-right": build_composite(nl, "single-right", -1.0, 0.0, 3.0, opts=opts),
        "double": build_composite(nl, "double", -3.0, 0.0, 3.0, opts=opts),
    }


def breaking_front(opts=PRECISE):
    """Front through a characteristic value where g' < 0 (gradient blow-up fixture)."""
    nl = catalog("figure-breaking")
    return nl, build_front(nl, -1.0, 0.0, 1.0, strict=False, opts=opts)


def infinity_wave(opts=PRECISE):
    """Smooth wave with speed 2 from 1 down to 0; the right endstate has g'(0) = pi > 0."""
    nl = catalog("figure")
    return nl, build_smooth(nl, 2.0, 0.5, opts=opts)


def unstable_shock(opts=PRECISE):
    """Burgers flux, source 4u(u+0.2)(u+0.45)(u+0.75): smooth piece from -0.2 through 0,
    jump from 0.75 down to -0.75 with positive source quotient."""
    g = 4.0 * P.polyfromroots([0.0, -0.2, -0.45, -0.75])
    nl = polynomial_pair([0.0, 0.0, 0.5], g, (-0.9, 1.0), "burgers-quartic")
    return nl, build_composite(nl, "single-right", -0.2, 0.0, -0.75, strict=False, opts=opts)


def burgers_front(opts=PRECISE):
    """f = u^2/2, g = u - u^3; the front is tanh."""
    nl = catalog("burgers-cubic-source")
    return nl, build_front(nl, -1.0, 0.0, 1.0, opts=opts)


FAMILY_ROOTS = (-1.0, -0.6, 1.0, 1.2)
FAMILY_DOUBLE_ROOT = -2.05
FAMILY_LEFT_TRACE = -1.85


def family_nonlinearity() -> Nonlinearity:
    """f = u^3/3 - u with g vanishing at -1, -0.6, 1, 1.2 and doubly at -2.05,
    scaled so that the jump rate of the family wave equals 1."""
    g = -P.polymul(P.polyfromroots(FAMILY_ROOTS), P.polyfromroots([FAMILY_DOUBLE_ROOT] * 2))
    f = [0.0, -1.0, 0.0, 1.0 / 3.0]
    raw = polynomial_pair(f, g, (-2.0, 1.5))
    ul = FAMILY_LEFT_TRACE
    ur = _cubic_rh_partner(ul)
    rate = -(raw.g(ur) - raw.g(ul)) / (ur - ul)
    return polynomial_pair(f, g / rate, (-2.0, 1.5), "two-point-family")


def _cubic_rh_partner(ul):
    # u^3/3 - u = ul^3/3 - ul with the factor (u - ul) removed: u^2 + ul u + ul^2 - 3 = 0
    return (-ul - math.sqrt(12.0 - 3.0 * ul * ul)) / 2.0


def family_wave(opts=PRECISE):
    """Two smooth pieces through -1 and 1 joined by one jump with left trace -1.85."""
    from .profile import integrate_carrier
    nl = family_nonlinearity()
    left = integrate_carrier(nl, 0.0, -1.0, 0.0, 0, opts)
    right = integrate_carrier(nl, 0.0, 1.0, 0.0, 0, opts)
    ul = FAMILY_LEFT_TRACE
    span = left.solve_value(ul) - right.solve_value(_cubic_rh_partner(ul))
    return nl, build_chain(nl, [-1.0, 1.0], [0.0, float(span)], opts=opts)


FIXTURES = {
    "figure-front": figure_front,
    "breaking-front": breaking_front,
    "infinity-wave": infinity_wave,
    "unstable-shock": unstable_shock,
    "burgers-front": burgers_front,
    "family": family_wave,
}


def fixture(name: str):
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}") from None


def double_composite(opts=PRECISE) -> tuple[Nonlinearity, WaveProfile]:
    nl, comps = figure_composites(opts)
    return nl, comps["double"]
