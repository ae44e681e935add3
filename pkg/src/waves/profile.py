"""Traveling-wave profiles: dense ODE pieces, admissibility checks and builders."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (AssumptionViolated, BlowUp, DegenerateJump, NewtonDiverged, OleinikFailed,
                     OutOfFamilyBall, RootNotBracketed, StallNoEquilibrium, WavesError)
from .nonlinearity import Nonlinearity, VectorField, characteristic_zeros, source_zeros

FORMAT = "waves-profile/1"

# quintic Hermite basis in s = (x - x_i)/h, ascending powers
_HERMITE = np.array([
    [1, 0, 0, -10, 15, -6],
    [0, 1, 0, -6, 8, -3],
    [0, 0, 0.5, -1.5, 1.5, -0.5],
    [0, 0, 0, 10, -15, 6],
    [0, 0, 0, -4, 7, -3],
    [0, 0, 0, 0.5, -1, 0.5],
], dtype=float)


@dataclass
class IntegrationOptions:
    method: str = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = 0.05
    equilibrium_tol: float = 1e-8
    max_length: float = 400.0
    singular_tol: float = 1e-6


PRECISE = IntegrationOptions(method="DOP853", rtol=1e-13, atol=1e-14, max_step=0.02)


# ---------------------------------------------------------------- dense carrier

@dataclass(frozen=True)
class Tail:
    """Exponential model u_inf + (u_end - u_inf) * exp(rate * (x - x_end))."""
    u_inf: float
    rate: float
    x_end: float
    u_end: float

    def eval(self, x, m=0):
        e = np.exp(self.rate * (np.asarray(x, dtype=float) - self.x_end))
        amp = (self.u_end - self.u_inf) * self.rate ** m
        return (self.u_inf if m == 0 else 0.0) + amp * e

    def shifted(self, c):
        return replace(self, x_end=self.x_end + c)


class Carrier:
    """A smooth solution of the profile ODE: quintic Hermite window plus optional tails.

    ``const`` marks a constant solution (no breakpoints).
    """

    def __init__(self, breakpoints=None, coeffs=None, left_tail=None, right_tail=None, const=None):
        self.const = None if const is None else float(const)
        self.x = np.asarray(breakpoints if breakpoints is not None else [], dtype=float)
        self.coeffs = np.asarray(coeffs if coeffs is not None else np.zeros((0, 6)), dtype=float)
        self.left_tail = left_tail
        self.right_tail = right_tail

    @classmethod
    def from_samples(cls, xs, us, dus, ddus, left_tail=None, right_tail=None):
        xs = np.asarray(xs, dtype=float)
        h = np.diff(xs)
        y0 = np.stack([us[:-1], h * dus[:-1], h ** 2 * ddus[:-1],
                       us[1:], h * dus[1:], h ** 2 * ddus[1:]], axis=1)
        coeffs = y0 @ _HERMITE
        return cls(xs, coeffs, left_tail, right_tail)

    @property
    def is_constant(self):
        return self.const is not None

    @property
    def support(self):
        if self.is_constant:
            return (-math.inf, math.inf)
        lo = -math.inf if self.left_tail is not None else self.x[0]
        hi = math.inf if self.right_tail is not None else self.x[-1]
        return (lo, hi)

    @property
    def limits(self):
        if self.is_constant:
            return (self.const, self.const)
        lo = self.left_tail.u_inf if self.left_tail is not None else self.coeffs[0, 0]
        hi = self.right_tail.u_inf if self.right_tail is not None else float(np.sum(self.coeffs[-1]))
        return (float(lo), float(hi))

    def __call__(self, x, m=0):
        return self.eval(x, m)

    def eval(self, x, m=0):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        if self.is_constant:
            out = np.full(x_arr.shape, self.const if m == 0 else 0.0)
            return float(out[0]) if scalar else out
        out = np.full(x_arr.shape, np.nan)
        xs = self.x
        inside = (x_arr >= xs[0]) & (x_arr <= xs[-1])
        if np.any(inside):
            xi = x_arr[inside]
            idx = np.clip(np.searchsorted(xs, xi, side="right") - 1, 0, len(xs) - 2)
            h = xs[idx + 1] - xs[idx]
            s = (xi - xs[idx]) / h
            c = self.coeffs[idx]
            if m:
                for _ in range(m):
                    c = c[:, 1:] * np.arange(1, c.shape[1])
            val = c[:, -1].copy()
            for k in range(c.shape[1] - 2, -1, -1):
                val = val * s + c[:, k]
            out[inside] = val / h ** m
        if self.left_tail is not None:
            sel = x_arr < xs[0]
            out[sel] = self.left_tail.eval(x_arr[sel], m)
        if self.right_tail is not None:
            sel = x_arr > xs[-1]
            out[sel] = self.right_tail.eval(x_arr[sel], m)
        return float(out[0]) if scalar else out

    def shifted(self, c):
        if self.is_constant:
            return self
        return Carrier(self.x + c, self.coeffs,
                       self.left_tail.shifted(c) if self.left_tail else None,
                       self.right_tail.shifted(c) if self.right_tail else None)

    def solve_value(self, u, lo=None, hi=None):
        """Position where the (monotone) carrier takes value ``u`` inside [lo, hi]."""
        if self.is_constant:
            raise RootNotBracketed("constant carrier")
        slo, shi = self.support
        xs = self.x
        grid = xs
        if lo is not None or hi is not None:
            lo = max(lo if lo is not None else -math.inf, slo)
            hi = min(hi if hi is not None else math.inf, shi)
        vals = self.eval(grid) - u
        for i in range(len(grid) - 1):
            if lo is not None and (grid[i + 1] < lo or grid[i] > hi):
                continue
            if vals[i] == 0:
                return float(grid[i])
            if vals[i] * vals[i + 1] < 0:
                return float(brentq(lambda x: self.eval(x) - u, grid[i], grid[i + 1], xtol=1e-15))
        if vals[-1] == 0:
            return float(grid[-1])
        raise RootNotBracketed(f"value {u} not attained", value=u)

    def to_dict(self):
        if self.is_constant:
            return {"constant": self.const}
        tail = lambda t: None if t is None else {"u_inf": t.u_inf, "rate": t.rate,
                                                  "x_end": t.x_end, "u_end": t.u_end}
        return {"breakpoints": self.x.tolist(), "coeffs": self.coeffs.tolist(),
                "tail": {"left": tail(self.left_tail), "right": tail(self.right_tail)}}

    @classmethod
    def from_dict(cls, d):
        if "constant" in d:
            return cls(const=d["constant"])
        mk = lambda t: None if t is None else Tail(**t)
        return cls(d["breakpoints"], np.array(d["coeffs"], dtype=float).reshape(-1, 6),
                   mk(d["tail"]["left"]), mk(d["tail"]["right"]))


# ---------------------------------------------------------------- pieces and waves

@dataclass
class ProfilePiece:
    interval: tuple
    carrier: Carrier
    characteristic_points: list = field(default_factory=list)

    def __call__(self, x, m=0):
        return self.carrier.eval(x, m)

    @property
    def is_constant(self):
        return self.carrier.is_constant

    @property
    def left_limit(self):
        lo = self.interval[0]
        return self.carrier.limits[0] if lo == -math.inf else float(self.carrier.eval(lo))

    @property
    def right_limit(self):
        hi = self.interval[1]
        return self.carrier.limits[1] if hi == math.inf else float(self.carrier.eval(hi))

    @property
    def monotonicity(self):
        if self.is_constant:
            return "constant"
        return "increasing" if self.right_limit > self.left_limit else "decreasing"

    def sample_points(self, n=1000, span=12.0):
        lo, hi = self.interval
        slo, shi = self.carrier.support
        lo = max(lo, slo)
        hi = min(hi, shi)
        if lo == -math.inf:
            lo = (hi if hi < math.inf else 0.0) - span
        if hi == math.inf:
            hi = lo + span if lo > -span else span
        if hi <= lo:
            return np.array([])
        return np.linspace(lo, hi, n + 2)[1:-1]

    def shifted(self, c):
        return ProfilePiece((self.interval[0] + c, self.interval[1] + c), self.carrier.shifted(c),
                            [(x + c, u) for x, u in self.characteristic_points])


@dataclass(frozen=True)
class Jump:
    d: float
    u_left: float
    u_right: float


@dataclass
class WaveProfile:
    sigma: float
    pieces: list
    discontinuities: list = field(default_factory=list)
    label: str = ""

    @property
    def endstates(self):
        return (self.pieces[0].left_limit, self.pieces[-1].right_limit)

    @property
    def positions(self):
        return np.array([j.d for j in self.discontinuities])

    @property
    def characteristic_points(self):
        out = []
        for p in self.pieces:
            out.extend(p.characteristic_points)
        return out

    def piece_index(self, x):
        return np.searchsorted(self.positions, np.asarray(x, dtype=float), side="right")

    def __call__(self, x, m=0):
        return self.eval(x, m)

    def eval(self, x, m=0):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        idx = self.piece_index(x_arr)
        out = np.empty(x_arr.shape)
        for k, p in enumerate(self.pieces):
            sel = idx == k
            if np.any(sel):
                out[sel] = p.carrier.eval(x_arr[sel], m)
        return float(out[0]) if scalar else out

    def translate(self, c):
        return WaveProfile(self.sigma, [p.shifted(c) for p in self.pieces],
                           [Jump(j.d + c, j.u_left, j.u_right) for j in self.discontinuities], self.label)

    # invariants -------------------------------------------------------
    def check(self, nl: Nonlinearity, n=1000):
        """Return a dict of invariant name -> list of violation messages (empty when clean)."""
        out = {"rankine_hugoniot": [], "lax": [], "oleinik": [], "residual": [], "monotone": []}
        fscale = max(float(np.max(np.abs(nl.f(np.linspace(*nl.domain, 201))))), 1.0)
        for j in self.discontinuities:
            rh = nl.f(j.u_right) - nl.f(j.u_left) - self.sigma * (j.u_right - j.u_left)
            if abs(rh) > 1e-9 * fscale:
                out["rankine_hugoniot"].append(f"d={j.d}: residual {rh:.3e}")
            ml, mr = nl.fp(j.u_left) - self.sigma, self.sigma - nl.fp(j.u_right)
            if not (ml > 0 and mr > 0):
                out["lax"].append(f"d={j.d}: margins {ml:.3e}, {mr:.3e}")
            v = oleinik_violation(nl, j.u_left, j.u_right, 100)
            if v is not None:
                out["oleinik"].append(f"d={j.d}: fails at v={v}")
        gscale = max(float(np.max(np.abs(nl.g(np.linspace(*nl.domain, 201))))), 1.0)
        for p in self.pieces:
            if p.is_constant:
                if abs(nl.g(p.carrier.const)) > 1e-10 * gscale:
                    out["residual"].append(f"constant {p.carrier.const} is not a zero of g")
                continue
            xs = p.sample_points(n)
            U = p(xs)
            dU = p(xs, 1)
            res = (nl.fp(U) - self.sigma) * dU - nl.g(U)
            if np.max(np.abs(res)) > 1e-8 * gscale:
                out["residual"].append(f"piece {p.interval}: residual {np.max(np.abs(res)):.3e}")
            s = np.sign(dU)
            if not (np.all(s > 0) or np.all(s < 0)):
                out["monotone"].append(f"piece {p.interval}: derivative changes sign")
        return out

    def assert_valid(self, nl):
        bad = {k: v for k, v in self.check(nl).items() if v}
        if bad:
            raise AssumptionViolated([f"{k}: {m}" for k, v in bad.items() for m in v])

    # serialization ------------------------------------------------------
    def to_dict(self):
        fin = lambda v: None if not math.isfinite(v) else v
        return {
            "format": FORMAT,
            "sigma": self.sigma,
            "label": self.label,
            "discontinuities": [{"d": j.d, "u_left": j.u_left, "u_right": j.u_right}
                                for j in self.discontinuities],
            "pieces": [dict(interval=[fin(p.interval[0]), fin(p.interval[1])],
                            characteristic_points=[list(c) for c in p.characteristic_points],
                            **p.carrier.to_dict()) for p in self.pieces],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT:
            raise WavesError(f"unsupported profile format {d.get('format')!r}")
        unfin = lambda v, s: s * math.inf if v is None else v
        pieces = [ProfilePiece((unfin(p["interval"][0], -1), unfin(p["interval"][1], 1)),
                               Carrier.from_dict(p),
                               [tuple(c) for c in p.get("characteristic_points", [])])
                  for p in d["pieces"]]
        jumps = [Jump(j["d"], j["u_left"], j["u_right"]) for j in d["discontinuities"]]
        return cls(d["sigma"], pieces, jumps, d.get("label", ""))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def oleinik_violation(nl, u_left, u_right, n=100):
    """First sampled v strictly between the traces where the strict Oleinik inequality fails."""
    vs = np.linspace(u_left, u_right, n + 2)[1:-1]
    lhs = (nl.f(vs) - nl.f(u_left)) / (vs - u_left)
    rhs = (nl.f(vs) - nl.f(u_right)) / (vs - u_right)
    bad = np.nonzero(~(lhs > rhs))[0]
    return float(vs[bad[0]]) if len(bad) else None


# ---------------------------------------------------------------- profile ODE integration

def _half(vf: VectorField, u0, x0, direction, opts, stop_value=None, zeros=None):
    """Integrate U' = F(U) from (x0, u0) in ``direction``; returns (xs, us, tail, reason)."""
    nl = vf.nl
    sigma = vf.sigma
    F0 = vf.F(u0)
    if F0 == 0.0 or abs(F0) < 1e-300:
        return np.array([x0]), np.array([u0]), None, "constant"
    m = np.sign(direction * F0)
    char_vals = [e[0] for e in vf.expansions]
    if zeros is None:
        zeros = source_zeros(nl)
    plain = [z for z in zeros if all(abs(z - c) > 1e-9 for c in char_vals)]
    ahead = [z for z in plain if m * (z - u0) > 0]
    target = min(ahead, key=lambda z: abs(z - u0)) if ahead else None
    fs = nl.flux_slope_scale

    def rhs(s, y):
        return [direction * vf.F(y[0])]

    events = []
    if target is not None:
        ev_eq = lambda s, y: abs(y[0] - target) - opts.equilibrium_tol
        ev_eq.terminal = True
        ev_eq.direction = -1
        events.append(("equilibrium", ev_eq))
    if stop_value is not None and m * (stop_value - u0) > 0:
        ev_stop = lambda s, y: (y[0] - stop_value) * m
        ev_stop.terminal = True
        events.append(("stop", ev_stop))
    lo, hi = nl.domain
    ev_lo = lambda s, y: y[0] - lo
    ev_lo.terminal = True
    ev_hi = lambda s, y: y[0] - hi
    ev_hi.terminal = True
    events += [("domain", ev_lo), ("domain", ev_hi)]

    def ev_sing(s, y):
        u = y[0]
        if any(abs(u - c) < 1e-3 * nl.state_scale for c in char_vals):
            return 1.0
        return abs(nl.fp(u) - sigma) - opts.singular_tol * fs
    ev_sing.terminal = True
    ev_sing.direction = -1
    events.append(("singular", ev_sing))

    sol = solve_ivp(rhs, (0.0, opts.max_length), [u0], method=opts.method, rtol=opts.rtol,
                    atol=opts.atol, max_step=opts.max_step, events=[e for _, e in events],
                    dense_output=True)
    if sol.status == -1:
        raise BlowUp(f"profile integration failed: {sol.message}", x0=x0, u0=u0)
    reason = "length"
    for (name, _), tev in zip(events, sol.t_events):
        if len(tev):
            reason = name
            break
    if reason == "length":
        raise StallNoEquilibrium("no equilibrium reached within the integration budget",
                                 x0=x0, u0=u0, max_length=opts.max_length)
    s, us = _refine_samples(vf, sol, direction, sol.t, sol.y[0])
    xs = x0 + direction * s
    tail = None
    if reason == "equilibrium":
        rate = nl.gp(target) / (nl.fp(target) - sigma)
        if rate * direction >= 0:
            raise StallNoEquilibrium("equilibrium is not approached exponentially", u_inf=target)
        tail = Tail(float(target), float(rate), float(xs[-1]), float(us[-1]))
    return xs, us, tail, reason


def _refine_samples(vf, sol, direction, s, us, tol=1e-12, rounds=10):
    """Insert dense-output samples until the quintic Hermite interpolant matches the
    integrator at every interval midpoint (value and scaled slope)."""
    scale = max(1.0, vf.nl.state_scale)
    for _ in range(rounds):
        if len(s) < 2:
            break
        du = direction * vf.F(us)
        c = Carrier.from_samples(s, us, du, vf.dF(us) * vf.F(us))
        mids = 0.5 * (s[:-1] + s[1:])
        um = sol.sol(mids)[0]
        h = np.diff(s)
        err = np.abs(c.eval(mids) - um) + h * np.abs(c.eval(mids, 1) - direction * vf.F(um))
        bad = err > tol * scale
        if not np.any(bad):
            break
        s = np.concatenate([s, mids[bad]])
        us = np.concatenate([us, um[bad]])
        order = np.argsort(s)
        s, us = s[order], us[order]
    return s, us


def _carrier_from(vf, xs, us, left_tail, right_tail):
    dus = vf.F(us)
    ddus = vf.dF(us) * dus
    return Carrier.from_samples(xs, us, dus, ddus, left_tail, right_tail)


def _find_char_points(carrier, char_vals, interval=(-math.inf, math.inf)):
    pts = []
    if carrier.is_constant:
        return pts
    vals = carrier.eval(carrier.x)
    for c in char_vals:
        d = vals - c
        for i in range(len(d) - 1):
            if d[i] == 0.0:
                x = carrier.x[i]
            elif d[i] * d[i + 1] < 0:
                x = brentq(lambda x: carrier.eval(x) - c, carrier.x[i], carrier.x[i + 1], xtol=1e-15)
            else:
                continue
            if interval[0] < x < interval[1] and all(abs(x - p[0]) > 1e-9 for p in pts):
                pts.append((float(x), float(c)))
    pts.sort()
    return pts


def integrate_carrier(nl: Nonlinearity, sigma, u0, x0=0.0, direction=0, opts=None,
                      stop_value=None, vf=None) -> Carrier:
    opts = opts or IntegrationOptions()
    vf = vf or VectorField(nl, sigma)
    zeros = source_zeros(nl)
    if direction == 0:
        xl, ul, tl, rl = _half(vf, u0, x0, -1, opts, stop_value, zeros)
        xr, ur, tr, rr = _half(vf, u0, x0, 1, opts, stop_value, zeros)
        if rl == "constant" and rr == "constant":
            return Carrier(const=u0)
        xs = np.concatenate([xl[::-1], xr[1:]])
        us = np.concatenate([ul[::-1], ur[1:]])
        return _carrier_from(vf, xs, us, tl, tr)
    xs, us, tail, reason = _half(vf, u0, x0, direction, opts, stop_value, zeros)
    if reason == "constant":
        return Carrier(const=u0)
    if direction < 0:
        return _carrier_from(vf, xs[::-1], us[::-1], tail, None)
    return _carrier_from(vf, xs, us, None, tail)


def integrate_profile(nl: Nonlinearity, sigma, u0, x0=0.0, direction=0, opts=None,
                      stop_value=None) -> ProfilePiece:
    """Dense solution of the profile ODE from U(x0) = u0.

    direction = +1 / -1 integrates to the right / left only, 0 integrates both ways.
    The piece ends at an equilibrium (then extends to infinity with an exponential
    tail), at ``stop_value``, at the domain boundary, or where f'(U) = sigma off the
    zero set of g.
    """
    vf = VectorField(nl, sigma)
    carrier = integrate_carrier(nl, sigma, u0, x0, direction, opts, stop_value, vf)
    interval = carrier.support
    if direction > 0:
        interval = (x0, interval[1])
    elif direction < 0:
        interval = (interval[0], x0)
    chars = _find_char_points(carrier, [e[0] for e in vf.expansions], interval)
    if direction == 0 and not carrier.is_constant and any(abs(u0 - e[0]) < 1e-12 for e in vf.expansions):
        chars = sorted({(float(x0), float(u0))} | {c for c in chars if abs(c[0] - x0) > 1e-9})
    return ProfilePiece(interval, carrier, chars)


# ---------------------------------------------------------------- root solving

def solve_root(func, dfunc, a, b, width=1e-12, newton_steps=3):
    """Bracketed bisection to ``width`` then Newton polishing (kept only if it stays bracketed)."""
    fa, fb = func(a), func(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise RootNotBracketed("no sign change", a=a, b=b)
    lo, hi = (a, b) if a < b else (b, a)
    flo = func(lo)
    for _ in range(200):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(newton_steps):
        d = dfunc(x)
        if d == 0 or not np.isfinite(d):
            break
        xn = x - func(x) / d
        if not (lo - width <= xn <= hi + width):
            break
        x = xn
    return float(x)


def _scan_roots(func, xs):
    vals = np.array([func(x) for x in xs])
    out = []
    for i in range(len(xs) - 1):
        if vals[i] == 0 or vals[i] * vals[i + 1] < 0:
            out.append((xs[i], xs[i + 1]))
    return out


def _rh_mismatch(nl, sigma, left, right):
    """x -> [f(U) - sigma U] across a jump between two carriers, and its x-derivative."""
    def h(x):
        ul, ur = left.eval(x), right.eval(x)
        return (nl.f(ur) - sigma * ur) - (nl.f(ul) - sigma * ul)

    def dh(x):
        ul, ur = left.eval(x), right.eval(x)
        return nl.g(ur) * (not right.is_constant) - nl.g(ul) * (not left.is_constant)
    return h, dh


def locate_jump(nl, sigma, left: Carrier, right: Carrier, lo, hi, prefer="near", anchor=None, n=2000,
                accept=None):
    """Jump position in (lo, hi) where the Rankine-Hugoniot mismatch of the two carriers vanishes.

    ``accept(ul, ur)`` filters candidate roots; the one nearest ``anchor`` wins.
    """
    lo = max(lo, left.support[0], right.support[0])
    hi = min(hi, left.support[1], right.support[1])
    if not (hi > lo):
        raise RootNotBracketed("carriers do not overlap", lo=lo, hi=hi)
    h, dh = _rh_mismatch(nl, sigma, left, right)
    xs = np.linspace(lo, hi, n)
    brackets = _scan_roots(h, xs)
    if not brackets:
        raise RootNotBracketed("Rankine-Hugoniot mismatch has no sign change", lo=lo, hi=hi)
    if anchor is not None:
        brackets.sort(key=lambda b: abs(0.5 * (b[0] + b[1]) - anchor))
    roots = [solve_root(h, dh, *b) for b in brackets]
    if accept is not None:
        roots = [d for d in roots if accept(float(left.eval(d)), float(right.eval(d)))]
        if not roots:
            raise RootNotBracketed("no admissible Rankine-Hugoniot root", lo=lo, hi=hi)
    return roots[0]


def _bounded(lo, hi, span=40.0):
    lo = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0) - span
    hi = hi if math.isfinite(hi) else lo + 2 * span
    return lo, hi


# ---------------------------------------------------------------- builders

def _zero_tol(nl):
    return 1e-10 * max(float(np.max(np.abs(nl.g(np.linspace(*nl.domain, 201))))), 1.0)


def _check_no_zero(nl, a, b, excluded, failures, label, n=1000):
    us = np.linspace(min(a, b), max(a, b), n + 2)[1:-1]
    keep = np.ones(len(us), bool)
    for e in excluded:
        keep &= np.abs(us - e) > 1e-6 * nl.state_scale
    us = us[keep]
    g = nl.g(us)
    if np.any(np.sign(g[1:]) != np.sign(g[:-1])) or np.any(g == 0):
        # sign changes are allowed only across excluded points
        segs = np.split(us, np.searchsorted(us, sorted(excluded)))
        for seg in segs:
            if len(seg) and (np.any(nl.g(seg) == 0) or len(set(np.sign(nl.g(seg)))) > 1):
                failures.append(f"{label}: g vanishes inside ({min(a, b)}, {max(a, b)})")
                return


def _check_char_unique(nl, a, b, u_star, failures, n=1000):
    sigma = nl.fp(u_star)
    us = np.linspace(min(a, b), max(a, b), n + 1)
    us = us[np.abs(us - u_star) > 1e-9 * nl.state_scale]
    s = (nl.fp(us) - sigma) * (us - u_star) * np.sign(nl.fpp(u_star))
    if np.any(s <= 0):
        failures.append("f' takes the characteristic speed away from u_star")


def _std_checks(nl, u_minus, u_star, u_plus, strict):
    tol = _zero_tol(nl)
    fails = []
    for name, u in (("u_minus", u_minus), ("u_star", u_star), ("u_plus", u_plus)):
        if not nl.in_domain(u):
            fails.append(f"{name}={u} outside domain {nl.domain}")
        elif abs(nl.g(u)) > tol:
            fails.append(f"g({name})={nl.g(u):.3g}!=0")
    if fails:
        return fails
    if strict:
        if not nl.gp(u_minus) < 0:
            fails.append("g'(u_minus)>=0")
        if not nl.gp(u_star) > 0:
            fails.append("g'(u_star)<=0" if nl.gp(u_star) == 0 else "g'(u_star)<0")
        if not nl.gp(u_plus) < 0:
            fails.append("g'(u_plus)>=0")
    if abs(nl.fpp(u_star)) <= 1e-12:
        fails.append("f''(u_star)=0")
    return fails


def build_constant(nl: Nonlinearity, u: float, sigma: float = 0.0) -> WaveProfile:
    if abs(nl.g(u)) > _zero_tol(nl):
        raise AssumptionViolated([f"g({u})!=0"])
    return WaveProfile(float(sigma), [ProfilePiece((-math.inf, math.inf), Carrier(const=u))], [],
                       "constant")


def build_front(nl: Nonlinearity, u_minus, u_star, u_plus, strict=True, opts=None) -> WaveProfile:
    """Continuous front through the characteristic value u_star, anchored at U(0) = u_star."""
    fails = []
    if not (u_minus < u_star < u_plus):
        fails.append("need u_minus < u_star < u_plus")
    fails += _std_checks(nl, u_minus, u_star, u_plus, strict)
    if not fails:
        _check_no_zero(nl, u_minus, u_plus, [u_star], fails, "interior zero")
        _check_char_unique(nl, u_minus, u_plus, u_star, fails)
    if fails:
        raise AssumptionViolated(fails)
    sigma = float(nl.fp(u_star))
    piece = integrate_profile(nl, sigma, u_star, 0.0, 0, opts)
    lim = piece.carrier.limits
    if {round(lim[0], 6), round(lim[1], 6)} != {round(u_minus, 6), round(u_plus, 6)}:
        raise AssumptionViolated([f"front does not connect the endstates (limits {lim})"])
    if strict and not (nl.fp(lim[0]) < sigma < nl.fp(lim[1])):
        raise AssumptionViolated(["endstate labeling f'(u-inf) < sigma < f'(u+inf) fails"])
    return WaveProfile(sigma, [piece], [], "front")


def build_smooth(nl: Nonlinearity, sigma, u0, opts=None) -> WaveProfile:
    """Continuous wave through a non-characteristic value u0 (anchored at U(0)=u0)."""
    piece = integrate_profile(nl, sigma, u0, 0.0, 0, opts)
    if not math.isinf(piece.interval[0]) or not math.isinf(piece.interval[1]):
        raise AssumptionViolated(["the orbit through u0 does not reach equilibria on both sides"])
    return WaveProfile(float(sigma), [piece], [], "smooth")


def build_riemann(nl: Nonlinearity, u_minus, u_plus, strict=True) -> WaveProfile:
    if u_minus == u_plus:
        raise DegenerateJump("zero-amplitude jump")
    tol = _zero_tol(nl)
    fails = [f"g({u})!=0" for u in (u_minus, u_plus) if abs(nl.g(u)) > tol]
    if strict:
        fails += [f"g'({u})>=0" for u in (u_minus, u_plus) if not nl.gp(u) < 0]
    sigma = float((nl.f(u_plus) - nl.f(u_minus)) / (u_plus - u_minus))
    a, b = nl.fp(u_minus) - sigma, nl.fp(u_plus) - sigma
    if not a * b < 0:
        fails.append("Lax: f'(u-)-sigma and f'(u+)-sigma must have opposite signs")
    if fails:
        raise AssumptionViolated(fails)
    ul, ur = (u_minus, u_plus) if a > 0 else (u_plus, u_minus)
    v = oleinik_violation(nl, ul, ur, 1000)
    if v is not None:
        raise OleinikFailed(f"Oleinik inequality fails at v={v}", v=v)
    pieces = [ProfilePiece((-math.inf, 0.0), Carrier(const=ul)),
              ProfilePiece((0.0, math.inf), Carrier(const=ur))]
    return WaveProfile(sigma, pieces, [Jump(0.0, float(ul), float(ur))], "riemann")


def _jump_checks(nl, sigma, ul, ur, fails, label, strict, stable_sign=None):
    if not nl.fp(ul) - sigma > 0 or not sigma - nl.fp(ur) > 0:
        fails.append(f"Lax fails at the {label} jump ({ul:.6g} | {ur:.6g})")
    if oleinik_violation(nl, ul, ur, 1000) is not None:
        fails.append(f"Oleinik fails at the {label} jump")
    if strict and stable_sign is not None and not stable_sign < 0:
        fails.append(f"jump source quotient is not negative at the {label} jump")


def build_composite(nl: Nonlinearity, kind: str, u_minus, u_star, u_plus, u_trace=None,
                    u_trace_right=None, strict=True, opts=None) -> WaveProfile:
    """Composite wave: constant state(s) joined by jump(s) to a smooth piece through u_star.

    kind = 'single-left'  : constant u_minus | jump | smooth through u_star -> u_plus
    kind = 'single-right' : u_minus <- smooth through u_star | jump | constant u_plus
    kind = 'double'       : constant | jump | smooth through u_star | jump | constant
    Jump traces on the smooth piece are solved from Rankine-Hugoniot unless given
    (``u_trace`` for the left jump, ``u_trace_right`` for the right jump; for
    'single-right' ``u_trace`` is the right jump trace).
    ``strict=False`` skips the stability sign conditions (used for unstable fixtures).
    """
    if kind not in ("single-left", "single-right", "double"):
        raise WavesError(f"unknown composite kind {kind!r}")
    fails = _std_checks(nl, u_minus, u_star, u_plus, strict)
    if fails:
        raise AssumptionViolated(fails)
    sigma = float(nl.fp(u_star))
    vf = VectorField(nl, sigma)
    carrier = integrate_carrier(nl, sigma, u_star, 0.0, 0, opts, vf=vf)
    lo, hi = _bounded(*carrier.support)
    const_l, const_r = Carrier(const=u_minus), Carrier(const=u_plus)
    jumps = []
    if kind == "single-right" and u_trace is not None:
        u_trace_right, u_trace = u_trace, None

    def place(const, side, given):
        if given is not None:
            if side < 0:
                d = carrier.solve_value(given, lo, 0.0)
            else:
                d = carrier.solve_value(given, 0.0, hi)
            return d
        if side < 0:
            return locate_jump(nl, sigma, const, carrier, lo, -1e-12, anchor=0.0)
        return locate_jump(nl, sigma, carrier, const, 1e-12, hi, anchor=0.0)

    try:
        d_left = place(const_l, -1, u_trace) if kind in ("single-left", "double") else None
        d_right = place(const_r, 1, u_trace_right) if kind in ("single-right", "double") else None
    except RootNotBracketed as exc:
        raise RootNotBracketed(f"smooth piece never attains the required trace: {exc}") from None
    pieces = []
    if d_left is not None:
        ur = float(carrier.eval(d_left))
        if abs((nl.f(ur) - nl.f(u_minus)) - sigma * (ur - u_minus)) > 1e-9:
            fails.append("Rankine-Hugoniot fails at the left jump")
        _jump_checks(nl, sigma, u_minus, ur, fails, "left", strict, nl.g(ur) / (ur - u_minus))
        pieces.append(ProfilePiece((-math.inf, d_left), const_l))
        jumps.append(Jump(float(d_left), float(u_minus), ur))
    left_end = d_left if d_left is not None else -math.inf
    right_end = d_right if d_right is not None else math.inf
    if d_left is None and not math.isinf(carrier.support[0]):
        fails.append("smooth piece does not reach an equilibrium on the left")
    if d_right is None and not math.isinf(carrier.support[1]):
        fails.append("smooth piece does not reach an equilibrium on the right")
    char_vals = [e[0] for e in vf.expansions]
    pieces.append(ProfilePiece((left_end, right_end), carrier,
                               _find_char_points(carrier, char_vals, (left_end, right_end))
                               or [(0.0, float(u_star))]))
    if d_right is not None:
        ul = float(carrier.eval(d_right))
        if abs((nl.f(u_plus) - nl.f(ul)) - sigma * (u_plus - ul)) > 1e-9:
            fails.append("Rankine-Hugoniot fails at the right jump")
        _jump_checks(nl, sigma, ul, u_plus, fails, "right", strict, -nl.g(ul) / (u_plus - ul))
        pieces.append(ProfilePiece((d_right, math.inf), const_r))
        jumps.append(Jump(float(d_right), ul, float(u_plus)))
    # endstates of the smooth piece on its unbounded side
    if kind == "single-left" and abs(carrier.limits[1] - u_plus) > 1e-6:
        fails.append(f"smooth piece tends to {carrier.limits[1]}, not u_plus={u_plus}")
    if kind == "single-right" and abs(carrier.limits[0] - u_minus) > 1e-6:
        fails.append(f"smooth piece tends to {carrier.limits[0]}, not u_minus={u_minus}")
    if fails:
        raise AssumptionViolated(fails)
    return WaveProfile(sigma, pieces, jumps, kind)


def build_chain(nl: Nonlinearity, u_stars, positions, strict=True, opts=None) -> WaveProfile:
    """Wave with one smooth piece through each characteristic value, consecutive pieces
    joined by Rankine-Hugoniot jumps located between the characteristic points."""
    if len(u_stars) != len(positions) or len(u_stars) < 1:
        raise WavesError("need matching, non-empty u_stars and positions")
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise WavesError("positions must be strictly increasing")
    sigmas = [float(nl.fp(u)) for u in u_stars]
    sigma = sigmas[0]
    if any(abs(s - sigma) > 1e-10 for s in sigmas):
        raise AssumptionViolated(["characteristic values do not share one speed"])
    fails = []
    tol = _zero_tol(nl)
    for u in u_stars:
        if abs(nl.g(u)) > tol:
            fails.append(f"g({u})!=0")
        elif strict and not nl.gp(u) > 0:
            fails.append(f"g'({u})<=0")
    if fails:
        raise AssumptionViolated(fails)
    vf = VectorField(nl, sigma)
    carriers = [integrate_carrier(nl, sigma, u, x, 0, opts, vf=vf) for u, x in zip(u_stars, positions)]
    def admissible(ul, ur):
        bad = []
        _jump_checks(nl, sigma, ul, ur, bad, "", strict, (nl.g(ur) - nl.g(ul)) / (ur - ul))
        return not bad

    ds = []
    for k in range(len(carriers) - 1):
        ds.append(locate_jump(nl, sigma, carriers[k], carriers[k + 1], positions[k], positions[k + 1],
                              anchor=0.5 * (positions[k] + positions[k + 1]), accept=admissible))
    return _assemble_chain(nl, sigma, carriers, ds, list(zip(positions, u_stars)), strict)


def _assemble_chain(nl, sigma, carriers, ds, chars, strict):
    bounds = [-math.inf] + list(ds) + [math.inf]
    pieces, jumps, fails = [], [], []
    for k, c in enumerate(carriers):
        iv = (bounds[k], bounds[k + 1])
        if not (c.support[0] <= iv[0] and c.support[1] >= iv[1]):
            fails.append(f"piece {k} does not cover its interval {iv}")
        pieces.append(ProfilePiece(iv, c, [chars[k]]))
    for k, d in enumerate(ds):
        ul, ur = float(carriers[k].eval(d)), float(carriers[k + 1].eval(d))
        _jump_checks(nl, sigma, ul, ur, fails, f"#{k}", strict, (nl.g(ur) - nl.g(ul)) / (ur - ul))
        jumps.append(Jump(float(d), ul, ur))
    if fails:
        raise AssumptionViolated(fails)
    return WaveProfile(sigma, pieces, jumps, "chain")


@dataclass(frozen=True)
class FamilyShift:
    psi_star: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.psi_star, self.psi_star[1:])):
            raise WavesError("psi_star must be strictly increasing")


def construct_family_member(profile: WaveProfile, nl: Nonlinearity, shift: FamilyShift,
                            eps0=0.25) -> WaveProfile:
    """Re-anchor each smooth piece at its prescribed characteristic position and re-solve
    every jump position from Rankine-Hugoniot."""
    chars = profile.characteristic_points
    n = len(chars)
    psi = list(shift.psi_star)
    if len(psi) != n or n < 1:
        raise WavesError(f"shift has {len(psi)} entries for {n} characteristic points")
    ref = np.array([c[0] for c in chars])
    dev = (np.array(psi) - psi[0]) - (ref - ref[0])
    if n > 1 and np.max(np.abs(dev[1:])) > eps0:
        raise OutOfFamilyBall("shift deviates too far from the reference spacing",
                              deviation=float(np.max(np.abs(dev))))
    sigma = profile.sigma
    # offset per piece: pieces holding a characteristic point follow it, constant pieces stay put
    offsets = []
    k = 0
    for p in profile.pieces:
        if p.characteristic_points:
            offsets.append(psi[k] - chars[k][0])
            k += len(p.characteristic_points)
        else:
            offsets.append(None)
    # constants and characteristic-free pieces inherit the offset of the first piece
    base = next((o for o in offsets if o is not None), 0.0)
    offsets = [o if o is not None else (0.0 if p.is_constant else base)
               for o, p in zip(offsets, profile.pieces)]
    carriers = [p.carrier.shifted(o) for p, o in zip(profile.pieces, offsets)]
    new_d = []
    for k, j in enumerate(profile.discontinuities):
        guess = j.d + 0.5 * (offsets[k] + offsets[k + 1])
        lo = max(_bounded(*carriers[k].support)[0], guess - 2.0)
        hi = min(_bounded(*carriers[k + 1].support)[1], guess + 2.0)
        if new_d:
            lo = max(lo, new_d[-1] + 1e-9)
        try:
            h, dh = _rh_mismatch(nl, sigma, carriers[k], carriers[k + 1])
            br = _scan_roots(h, np.linspace(lo, hi, 801))
            if not br:
                raise RootNotBracketed("no bracket")
            br.sort(key=lambda b: abs(0.5 * (b[0] + b[1]) - guess))
            d = solve_root(h, dh, *br[0])
        except RootNotBracketed:
            raise NewtonDiverged(f"Rankine-Hugoniot solve failed for jump {k}", k=k) from None
        new_d.append(d)
    bounds = [-math.inf] + new_d + [math.inf]
    pieces = []
    k = 0
    for i, (p, c) in enumerate(zip(profile.pieces, carriers)):
        cps = [(psi[k + m], cu) for m, (_, cu) in enumerate(p.characteristic_points)]
        k += len(p.characteristic_points)
        pieces.append(ProfilePiece((bounds[i], bounds[i + 1]), c, cps))
    jumps = [Jump(float(d), float(carriers[i].eval(d)), float(carriers[i + 1].eval(d)))
             for i, d in enumerate(new_d)]
    return WaveProfile(sigma, pieces, jumps, profile.label)


# ---------------------------------------------------------------- half-line extension

class HalfLineExtension:
    """C^1 extension of data given on one half-line.

    For data on (0, inf) the left side is v(0) e^x + (v'(0) - v(0)) x e^x, which matches
    value and slope at 0 and keeps the W^{1,inf} norm within a factor 1 + 2/e.
    An optional match point on the extended side is honoured with a compact bump.
    """

    def __init__(self, func, dfunc, side="right", match_point=None):
        self.func, self.dfunc, self.side = func, dfunc, side
        s = 1.0 if side == "right" else -1.0
        self.s = s
        self.v0 = float(func(0.0))
        self.dv0 = float(dfunc(0.0))
        self.match = None
        if match_point is not None:
            xm, vm = match_point
            if s * xm > 0:
                raise WavesError("match point must lie on the extended side")
            w = min(abs(xm) / 2.0, 1.0)
            base = self._blend_impl(np.array([xm]))[0]
            self.match = (xm, w, (vm - base) / np.exp(-1.0))

    def _blend_impl(self, x):
        # q(t) = e^{-t}(v0 + (v0 + d) t) with t = distance into the extended side and
        # d = derivative of the data along the same outward direction
        t = -self.s * x
        d = -self.s * self.dv0
        return np.exp(-t) * (self.v0 + (self.v0 + d) * t)

    def _blend_deriv(self, x):
        t = -self.s * x
        d = -self.s * self.dv0
        dq = np.exp(-t) * (d - (self.v0 + d) * t)
        return -self.s * dq

    def __call__(self, x):
        from .smooth import bump
        x = np.asarray(x, dtype=float)
        given = self.s * x >= 0
        out = np.where(given, self.func(np.where(given, x, 0.0)), self._blend_impl(x))
        if self.match is not None:
            xm, w, c = self.match
            out = out + np.where(given, 0.0, c * bump((x - xm) / w))
        return out if out.ndim else float(out)

    def deriv(self, x):
        from .smooth import bump_deriv
        x = np.asarray(x, dtype=float)
        given = self.s * x >= 0
        out = np.where(given, self.dfunc(np.where(given, x, 0.0)), self._blend_deriv(x))
        if self.match is not None:
            xm, w, c = self.match
            out = out + np.where(given, 0.0, c * bump_deriv((x - xm) / w) / w)
        return out if out.ndim else float(out)


def extend_half_line_data(func, dfunc, side="right", match_point=None) -> HalfLineExtension:
    return HalfLineExtension(func, dfunc, side, match_point)
