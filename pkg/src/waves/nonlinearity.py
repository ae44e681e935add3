"""Flux/source pairs, the profile vector field and the slope function."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from . import smooth
from .errors import (CharacteristicDegenerate, InsufficientSmoothness, SignViolation,
                     WavesError, ZeroClusterUnresolved)

_GL_NODES, _GL_WEIGHTS = leggauss(5)
_GL_T = 0.5 * (_GL_NODES + 1.0)        # nodes mapped to [0, 1]
_GL_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Flux ``f`` and source ``g`` with analytic derivative lists.

    ``f_derivs[k]`` is the k-th derivative of f (``f_derivs[0]`` is f itself),
    likewise for ``g_derivs``.
    """
    f_derivs: Sequence[Callable]
    g_derivs: Sequence[Callable]
    domain: tuple
    name: str = "custom"
    source: dict = field(default_factory=dict)

    # basic evaluations --------------------------------------------------
    def df(self, k, u):
        if k >= len(self.f_derivs):
            raise InsufficientSmoothness(f"flux derivative of order {k} unavailable",
                                         order=k, available=len(self.f_derivs) - 1)
        return self.f_derivs[k](u)

    def dg(self, k, u):
        if k >= len(self.g_derivs):
            raise InsufficientSmoothness(f"source derivative of order {k} unavailable",
                                         order=k, available=len(self.g_derivs) - 1)
        return self.g_derivs[k](u)

    def f(self, u):
        return self.f_derivs[0](u)

    def fp(self, u):
        return self.f_derivs[1](u)

    def fpp(self, u):
        return self.f_derivs[2](u)

    def g(self, u):
        return self.g_derivs[0](u)

    def gp(self, u):
        return self.g_derivs[1](u)

    def gpp(self, u):
        return self.g_derivs[2](u)

    @property
    def f_order(self):
        return len(self.f_derivs) - 1

    @property
    def g_order(self):
        return len(self.g_derivs) - 1

    @property
    def width(self):
        return float(self.domain[1] - self.domain[0])

    @property
    def state_scale(self):
        return max(self.width, 1e-300)

    @property
    def flux_slope_scale(self):
        us = np.linspace(self.domain[0], self.domain[1], 201)
        return max(float(np.max(np.abs(self.fp(us)))), 1.0)

    def in_domain(self, u, slack=0.0):
        u = np.asarray(u)
        return bool(np.all((u >= self.domain[0] - slack) & (u <= self.domain[1] + slack)))

    def check_derivatives(self, n=101, rel_tol=1e-6):
        """Compare each analytic derivative with a central difference of the one below.

        Returns the list of (label, order, relative error) that exceed ``rel_tol``.
        """
        lo, hi = self.domain
        h = 1e-5 * (hi - lo)
        us = np.linspace(lo + h, hi - h, n)
        bad = []
        for label, derivs in (("f", self.f_derivs), ("g", self.g_derivs)):
            for k in range(1, len(derivs)):
                exact = np.asarray(derivs[k](us), dtype=float)
                fd = (np.asarray(derivs[k - 1](us + h)) - np.asarray(derivs[k - 1](us - h))) / (2 * h)
                scale = max(float(np.max(np.abs(exact))), 1.0)
                err = float(np.max(np.abs(fd - exact))) / scale
                if not np.all(np.isfinite(exact)) or err > rel_tol:
                    bad.append((label, k, err))
        return bad

    def with_source(self, g_derivs, name=None):
        return Nonlinearity(self.f_derivs, g_derivs, self.domain, name or self.name + "+g", {})

    def with_domain(self, domain):
        return Nonlinearity(self.f_derivs, self.g_derivs, tuple(domain), self.name, self.source)


# ---------------------------------------------------------------- constructors

def _trig_derivs(amp, freq, kind, nmax):
    """Derivatives of amp*cos(freq*u) (kind='cos') or amp*sin(freq*u)."""
    out = []
    for k in range(nmax + 1):
        a = amp * freq ** k
        # cycle through +-cos/+-sin explicitly so exact zeros survive
        q = (k + (0 if kind == "cos" else -1)) % 4
        if q == 0:
            out.append(lambda u, a=a, w=freq: a * np.cos(w * u))
        elif q == 1:
            out.append(lambda u, a=a, w=freq: -a * np.sin(w * u))
        elif q == 2:
            out.append(lambda u, a=a, w=freq: -a * np.cos(w * u))
        else:
            out.append(lambda u, a=a, w=freq: a * np.sin(w * u))
    return out


def _poly_derivs(coeffs, nmax):
    p = np.polynomial.Polynomial(coeffs)
    out = []
    for _ in range(nmax + 1):
        out.append(lambda u, p=p: p(u))
        p = p.deriv()
    return out


def figure_pair(source_sign=1.0, domain=(-1.2, 1.2), nmax=10):
    """f = -cos(7u/4), g = source_sign * sin(pi u)."""
    f = _trig_derivs(-1.0, 7.0 / 4.0, "cos", nmax)
    g = _trig_derivs(source_sign, math.pi, "sin", nmax)
    name = "figure" if source_sign > 0 else "figure-breaking"
    return Nonlinearity(f, g, tuple(domain), name, {"catalog": name})


def polynomial_pair(f_coeffs, g_coeffs, domain, name="polynomial", nmax=10):
    return Nonlinearity(_poly_derivs(f_coeffs, nmax), _poly_derivs(g_coeffs, nmax),
                        tuple(domain), name,
                        {"f_coeffs": list(map(float, f_coeffs)), "g_coeffs": list(map(float, g_coeffs))})


def burgers_cubic(domain=(-1.5, 1.5)):
    """f = u^2/2, g = u - u^3; the front through 0 is tanh."""
    nl = polynomial_pair([0, 0, 0.5], [0, 1, 0, -1], domain, "burgers-cubic-source")
    return Nonlinearity(nl.f_derivs, nl.g_derivs, nl.domain, nl.name, {"catalog": nl.name})


CATALOG = {
    "figure": figure_pair,
    "figure-breaking": lambda: figure_pair(-1.0),
    "burgers-cubic-source": burgers_cubic,
}


def catalog(name: str, domain=None) -> Nonlinearity:
    try:
        nl = CATALOG[name]()
    except KeyError:
        raise WavesError(f"unknown catalog entry {name!r}; known: {sorted(CATALOG)}") from None
    return nl.with_domain(domain) if domain is not None else nl


def from_expressions(f_text: str, g_text: str, domain, order=8, name=None) -> Nonlinearity:
    from .expr import compile_expression, differentiate, parse_expression, check_denominators
    fa = parse_expression(f_text)
    ga = parse_expression(g_text)
    check_denominators(fa, domain)
    check_denominators(ga, domain)
    f = [compile_expression(differentiate(fa, k)) for k in range(order + 1)]
    g = [compile_expression(differentiate(ga, k)) for k in range(order + 1)]
    return Nonlinearity(f, g, tuple(domain), name or f"f={f_text}; g={g_text}",
                        {"f": f_text, "g": g_text})


# ---------------------------------------------------------------- slope function

def divided_difference(h0, h1, a, b, tol):
    """(h0(b)-h0(a))/(b-a), switching to Gauss-Legendre quadrature of h1 when |b-a|<=tol."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = b - a
    small = np.abs(diff) <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (h0(b) - h0(a)) / np.where(small, 1.0, diff)
    if np.any(small):
        pts = a[..., None] + _GL_T * diff[..., None]
        quad = np.sum(_GL_W * h1(pts), axis=-1)
        out = np.where(small, quad, out)
    return out if out.ndim else float(out)


def slope(nl: Nonlinearity, a, b):
    """Averaged flux derivative between a and b (the RH speed of the jump a|b)."""
    return divided_difference(nl.f, nl.fp, a, b, 1e-6 * nl.state_scale)


def source_slope(nl: Nonlinearity, a, b):
    return divided_difference(nl.g, nl.gp, a, b, 1e-6 * nl.state_scale)


# ---------------------------------------------------------------- profile vector field

def vector_field_F(nl: Nonlinearity, sigma: float, u):
    """Right-hand side of the profile equation U' = g(U)/(f'(U)-sigma).

    Within ``1e-7 * flux scale`` of a characteristic value the limit g'/f'' is used.
    """
    tau = 1e-7 * nl.flux_slope_scale
    u_arr = np.asarray(u, dtype=float)
    a = nl.fp(u_arr) - sigma
    near = np.abs(a) <= tau
    if np.any(near):
        fpp = np.asarray(nl.fpp(u_arr))
        if np.any(np.abs(np.where(near, fpp, 1.0)) <= 1e-12):
            raise CharacteristicDegenerate("f'' vanishes at a characteristic value", sigma=sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, nl.gp(u_arr) / np.where(near, nl.fpp(u_arr), 1.0),
                       nl.g(u_arr) / np.where(near, 1.0, a))
    return out if out.ndim else float(out)


def series_divide(num, den, n):
    """First n coefficients of num/den as power series."""
    out = np.zeros(n)
    for k in range(n):
        acc = num[k] if k < len(num) else 0.0
        for j in range(1, k + 1):
            if j < len(den):
                acc -= den[j] * out[k - j]
        out[k] = acc / den[0]
    return out


def series_compose(outer, inner, n):
    """Coefficients 0..n-1 of outer(inner(h)) where inner[0] == 0."""
    out = np.zeros(n)
    out[0] = outer[0]
    power = np.zeros(n)
    power[0] = 1.0
    for k in range(1, len(outer)):
        power = np.convolve(power, inner)[:n]
        if not np.any(power):
            break
        out += outer[k] * power
    return out


class VectorField:
    """U' = F(U) for fixed (nl, sigma), with Taylor expansions at characteristic zeros of g.

    Near a characteristic value u* that is also a zero of g, g/(f'-sigma) is a
    removable 0/0; there we evaluate the power series of the quotient instead.
    """

    def __init__(self, nl: Nonlinearity, sigma: float, char_values=None):
        self.nl = nl
        self.sigma = float(sigma)
        if char_values is None:
            char_values = characteristic_zeros(nl, sigma)
        self.expansions = []
        for us in char_values:
            coeffs = self._quotient_series(us)
            c_tail = max(abs(coeffs[-1]), abs(coeffs[-2]) if len(coeffs) > 1 else 0.0, 1e-300)
            n = len(coeffs)
            radius = min((1e-16 / c_tail) ** (1.0 / (n + 1)), 0.05 * nl.state_scale)
            self.expansions.append((float(us), coeffs, radius))

    def _quotient_series(self, us):
        nl = self.nl
        kg = nl.g_order
        kf = nl.f_order
        n = min(kg, kf - 1)
        if n < 1:
            raise InsufficientSmoothness("need g' and f'' at a characteristic value")
        num = np.array([nl.dg(k + 1, us) / math.factorial(k + 1) for k in range(n)])
        den = np.array([nl.df(k + 2, us) / math.factorial(k + 1) for k in range(n)])
        if abs(den[0]) <= 1e-12:
            raise CharacteristicDegenerate("f'' vanishes at a characteristic value", u=float(us))
        return series_divide(num, den, n)

    def _select(self, u):
        for us, coeffs, r in self.expansions:
            if abs(u - us) < r:
                return us, coeffs
        return None

    def F(self, u):
        u_arr = np.asarray(u, dtype=float)
        out = np.asarray(_direct_F(self.nl, self.sigma, u_arr), dtype=float)
        for us, coeffs, r in self.expansions:
            m = np.abs(u_arr - us) < r
            if np.any(m):
                d = u_arr - us
                out = np.where(m, np.polynomial.polynomial.polyval(d, coeffs), out)
        return out if out.ndim else float(out)

    def dF(self, u):
        """dF/du, i.e. U''/U' along a profile."""
        nl = self.nl
        u_arr = np.asarray(u, dtype=float)
        a = nl.fp(u_arr) - self.sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (nl.gp(u_arr) * a - nl.g(u_arr) * nl.fpp(u_arr)) / a ** 2
        for us, coeffs, r in self.expansions:
            m = np.abs(u_arr - us) < max(r, 1e-3 * nl.state_scale)
            if np.any(m):
                d = u_arr - us
                dc = np.polynomial.polynomial.polyder(coeffs) if len(coeffs) > 1 else np.zeros(1)
                out = np.where(m, np.polynomial.polynomial.polyval(d, dc), out)
        return out if out.ndim else float(out)

    def quotient_coeffs(self, us):
        for u0, coeffs, _ in self.expansions:
            if abs(u0 - us) < 1e-12 * max(1.0, abs(us)):
                return coeffs
        return self._quotient_series(us)

    def taylor_at_char(self, us, order):
        """Coefficients p_0..p_order of U(x*+h) for the profile through u* at x*."""
        coeffs = self.quotient_coeffs(us)
        if len(coeffs) < order:
            raise InsufficientSmoothness(f"Taylor order {order} needs more derivatives of f and g",
                                         order=order, available=len(coeffs))
        p = np.zeros(order + 1)
        p[0] = us
        inner = np.zeros(order + 1)
        p[1] = coeffs[0]
        inner[1] = p[1]
        for n in range(1, order):
            comp = series_compose(coeffs[: n + 1], inner[: n + 1], n + 1)
            p[n + 1] = comp[n] / (n + 1)
            inner[n + 1] = p[n + 1]
        return p


def _direct_F(nl, sigma, u):
    a = nl.fp(u) - sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        return nl.g(u) / a


# ---------------------------------------------------------------- zeros and genericity

def find_zeros(func, interval, n=10_000):
    """Simple zeros of ``func`` on ``interval`` by grid sign changes plus Brent refinement."""
    lo, hi = interval
    us = np.linspace(lo, hi, n + 1)
    vals = np.asarray(func(us), dtype=float)
    roots = []
    i = 0
    while i < n:
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(float(us[i]))
        elif a * b < 0:
            roots.append(float(brentq(func, us[i], us[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)))
        i += 1
    if vals[n] == 0.0:
        roots.append(float(us[n]))
    roots.sort()
    for r0, r1 in zip(roots, roots[1:]):
        if r1 - r0 < 1e-12 * max(1.0, abs(r0)):
            raise ZeroClusterUnresolved("adjacent zeros cannot be separated", pair=[r0, r1])
    # snap numerically-zero values to exact grid-aligned roots (e.g. sin(pi*u) at integers)
    return roots


def source_zeros(nl: Nonlinearity, interval=None):
    return find_zeros(nl.g, interval or nl.domain)


def characteristic_zeros(nl: Nonlinearity, sigma, interval=None, tol=1e-9):
    """Zeros u of g with |f'(u) - sigma| <= tol * flux scale."""
    scale = nl.flux_slope_scale
    return [u for u in source_zeros(nl, interval) if abs(nl.fp(u) - sigma) <= tol * scale]


def check_generic_pair(nl: Nonlinearity, interval=None):
    """Distinct zeros of g with g' >= 0 must have distinct values of f'.

    Returns (ok, offending_pair_or_None).
    """
    zeros = [u for u in source_zeros(nl, interval) if nl.gp(u) >= 0]
    for i, u in enumerate(zeros):
        for v in zeros[i + 1:]:
            if abs(nl.fp(u) - nl.fp(v)) <= 1e-10:
                return False, (u, v)
    return True, None


# ---------------------------------------------------------------- source extension

def extend_nonlinearity(nl: Nonlinearity, a2: float, a1: float, a: float, alpha: float,
                        nsample=1000) -> Nonlinearity:
    """Modify g below ``a1`` so that it vanishes at ``a2`` with slope ``alpha`` and stays negative on (a2, a].

    The new source equals g on [a1, top] and blends, through a smooth step, into the
    line alpha*(u - a2) on a transition layer chosen inside the region where g < 0.
    """
    if not (a2 < a1 < a):
        raise WavesError("need a2 < a1 < a")
    if alpha >= 0:
        raise WavesError("alpha must be negative")
    us = np.linspace(a1, a, nsample)
    if np.any(nl.g(us) >= 0):
        raise SignViolation("g must be negative on [a1, a]", interval=[a1, a])
    # transition layer [a1 - w, a1] where g stays negative
    w = 0.5 * (a1 - a2)
    while w > 1e-12:
        probe = np.linspace(a1 - w, a1, 200)
        if np.all(nl.g(probe) < 0):
            break
        w *= 0.5
    x0 = a1 - w
    nmax = nl.g_order

    def make(k):
        def gk(u):
            u = np.asarray(u, dtype=float)
            t = (u - x0) / w
            S = smooth.smooth_step_derivs(t, k)
            line = [alpha * (u - a2), np.full_like(u, alpha)] + [np.zeros_like(u)] * max(0, k - 1)
            diff = [nl.dg(j, u) - line[j] for j in range(k + 1)]
            out = line[k].copy()
            for j in range(k + 1):
                out = out + math.comb(k, j) * S[j] / w ** j * diff[k - j]
            out = np.where(t >= 1.0, nl.dg(k, u), np.where(t <= 0.0, line[k], out))
            return out if out.ndim else float(out)
        return gk

    new = nl.with_source([make(k) for k in range(nmax + 1)], name=nl.name + "-extended")
    check = np.linspace(a2, a, nsample + 1)[1:]
    if np.any(new.g(check) >= 0):
        raise SignViolation("extended source is not negative on (a2, a]")
    return new
