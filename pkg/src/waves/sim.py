"""Method of characteristics with explicit shock tracking.

Every characteristic carries its position X, value v and the spatial sensitivities
dX = dX/dx0, dv = dv/dx0.  Between shocks the solution is v as a function of X.
Shocks move with the slope of f between their traces; traces are read off the four
nearest active characteristics of each side.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import (BrokenRegion, DomainExit, EventCascadeOverflow, ResolutionWarning,
                     ShockDies, ShockLost, WavesError)
from .nonlinearity import Nonlinearity, VectorField, slope
from .profile import WaveProfile

log = logging.getLogger(__name__)

ACTIVE, ABSORBED, BROKEN = 0, 1, 2
ABSORB_TOL = 1e-10
MAX_EVENTS = 10_000
# relative seed separation below which a new characteristic is interpolated, not re-integrated
X0_RESOLUTION = 1e-13


# ---------------------------------------------------------------- inputs

@dataclass
class Perturbation:
    """Initial perturbation v0 added to the profile.

    ``jumps`` are positions where v0 is discontinuous and a new shock is tracked;
    ``pins`` are positions seeded exactly; ``support`` is refined with spacing ``h``.
    """
    func: object = None
    deriv: object = None
    jumps: tuple = ()
    pins: tuple = ()
    support: tuple | None = None
    h: float | None = None

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if self.func is None else np.asarray(self.func(x), dtype=float)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if self.deriv is None else np.asarray(self.deriv(x), dtype=float)


@dataclass
class Sampling:
    """Seed layout: uniform spacing ``h`` on ``window`` plus geometric grading
    (ratio, smallest offset) around jumps, characteristic points and pins."""
    window: tuple | None = None
    span: float = 20.0
    h: float = 0.02
    ratio: float = 1.2
    min_offset: float = 1e-12
    min_per_region: int = 8


@dataclass
class Policy:
    breaking: str = "halt"        # halt | mark
    lax: str = "raise"            # raise | remove
    reseed: bool = True
    reseed_factor: float = 4.0
    reseed_every: int = 10
    max_characteristics: int = 200_000


# ---------------------------------------------------------------- records

@dataclass
class ShockCurve:
    kind: str                     # background | small
    samples: list = field(default_factory=list)

    COLUMNS = ("t", "phi", "speed", "u_l", "u_r", "lax_left", "lax_right", "rh_residual")

    def add(self, nl, t, phi, ul, ur):
        s = float(slope(nl, ul, ur))
        rh = float(nl.f(ur) - nl.f(ul) - s * (ur - ul))
        self.samples.append((t, phi, s, ul, ur, float(nl.fp(ul) - s), float(s - nl.fp(ur)), rh))

    def array(self, name):
        k = self.COLUMNS.index(name)
        return np.array([r[k] for r in self.samples])

    def check(self):
        if not self.samples:
            return {"max_rh_residual": 0.0, "min_lax": math.inf}
        return {"max_rh_residual": float(np.max(np.abs(self.array("rh_residual")))),
                "min_lax": float(min(np.min(self.array("lax_left")), np.min(self.array("lax_right"))))}


@dataclass
class Shock:
    phi: float
    left: int                     # region id on the left
    right: int
    curve: ShockCurve
    alive: bool = True


@dataclass
class Snapshot:
    t: float
    x: np.ndarray
    u: np.ndarray
    region: np.ndarray
    shocks: list                  # (phi, u_l, u_r)
    coarse: bool = False

    def at(self, x):
        """Value at x, or the pair of traces when x is a shock position."""
        for phi, ul, ur in self.shocks:
            if abs(x - phi) <= 1e-12 * max(1.0, abs(phi)):
                return (ul, ur)
        return float(np.interp(x, self.x, self.u))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u", "region"])
        for a, b, c in zip(self.x, self.u, self.region):
            w.writerow([repr(float(a)), repr(float(b)), int(c)])
        return buf.getvalue()


# ---------------------------------------------------------------- helpers

def lagrange_eval(nodes, values, x):
    """Interpolating polynomial through (nodes, values) evaluated at x."""
    n = len(nodes)
    if n == 0:
        return math.nan
    out = 0.0
    for i in range(n):
        w = 1.0
        for j in range(n):
            if j != i:
                w *= (x - nodes[j]) / (nodes[i] - nodes[j])
        out += w * values[i]
    return out


def _graded(center, lo, hi, h, ratio, min_offset):
    pts = []
    off = min_offset
    while off < h:
        for p in (center - off, center + off):
            if lo < p < hi:
                pts.append(p)
        off *= ratio
    return pts


def _char_rhs(nl, y):
    m = y.size // 4
    X, v, dX, dv = y[:m], y[m:2 * m], y[2 * m:3 * m], y[3 * m:]
    return np.concatenate([nl.fp(v), nl.g(v), nl.fpp(v) * dv, nl.gp(v) * dv])


def integrate_characteristics(nl: Nonlinearity, x0, v0, dv0, t, rtol=1e-12, atol=1e-14):
    """Free characteristics (no shock interaction) from time 0 to t, high-order adaptive."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.concatenate([x0, np.asarray(v0, float), np.ones_like(x0), np.asarray(dv0, float)])
    if t <= 0:
        return y0.reshape(4, -1)
    sol = solve_ivp(lambda s, y: _char_rhs(nl, y), (0.0, t), y0, method="DOP853",
                    rtol=rtol, atol=atol)
    return sol.y[:, -1].reshape(4, -1)


# ---------------------------------------------------------------- field

class CharacteristicField:
    def __init__(self, nl: Nonlinearity, profile: WaveProfile, perturbation: Perturbation,
                 sampling: Sampling, policy: Policy):
        self.nl, self.profile = nl, profile
        self.perturbation, self.sampling, self.policy = perturbation, sampling, policy
        self.t = 0.0
        self.x0 = np.zeros(0)
        self.X = np.zeros(0)
        self.v = np.zeros(0)
        self.dX = np.zeros(0)
        self.dv = np.zeros(0)
        self.region = np.zeros(0, dtype=int)
        self.status = np.zeros(0, dtype=int)
        self.shocks: list[Shock] = []
        self.region_ids: list[int] = []
        self.spacing: dict = {}
        self.last_trace: dict = {}
        self.events: list = []
        self.breaks: list = []
        self.halted = False
        self.steps = 0
        self._vf = None

    # -- initial data
    def profile_slope(self, u, x):
        """U'(x) through the profile ODE (exact along the wave), zero on constant pieces."""
        out = np.zeros_like(u)
        idx = self.profile.piece_index(x)
        for k, p in enumerate(self.profile.pieces):
            sel = idx == k
            if np.any(sel) and not p.is_constant:
                if self._vf is None:
                    self._vf = VectorField(self.nl, self.profile.sigma,
                                           [c for _, c in self.profile.characteristic_points] or None)
                out[sel] = self._vf.F(u[sel])
        return out

    def initial_state(self, x0):
        x0 = np.asarray(x0, dtype=float)
        u = np.asarray(self.profile.eval(x0), dtype=float)
        v = u + self.perturbation.value(x0)
        dv = self.profile_slope(u, x0) + self.perturbation.slope(x0)
        return v, dv

    @property
    def active(self):
        return self.status == ACTIVE

    def region_members(self, rid, active_only=True):
        m = self.region == rid
        if active_only:
            m &= self.status == ACTIVE
        return np.nonzero(m)[0]

    # -- stencils and traces
    def stencils(self, idx_of):
        """Per live shock: (left indices, right indices) into the compact active arrays."""
        out = []
        for s in self.shocks:
            L = self._spread(self.region_members(s.left)[::-1])[::-1]
            R = self._spread(self.region_members(s.right))
            out.append((idx_of[L], idx_of[R]))
        return out

    def _spread(self, members, n=4):
        """First n members (ordered away from the shock) at least a quarter spacing apart,
        so that clustered seeds next to a jump do not make the extrapolation ill-conditioned."""
        if members.size <= n:
            return members
        gap = 0.25 * min(self.sampling.h, self.perturbation.h or math.inf)
        X = self.X[members]
        pick = [0]
        for i in range(1, members.size):
            if abs(X[i] - X[pick[-1]]) >= gap:
                pick.append(i)
                if len(pick) == n:
                    break
        if len(pick) < n:
            return members[:n]
        return members[pick]

    def traces(self):
        act = np.nonzero(self.active)[0]
        idx_of = np.full(self.x0.size, -1)
        idx_of[act] = np.arange(act.size)
        X, v = self.X[act], self.v[act]
        out = []
        for s, (L, R) in zip(self.shocks, self.stencils(idx_of)):
            ul = lagrange_eval(X[L], v[L], s.phi) if len(L) else self.last_trace.get((s.left, 1), math.nan)
            ur = lagrange_eval(X[R], v[R], s.phi) if len(R) else self.last_trace.get((s.right, 0), math.nan)
            out.append((ul, ur))
        return out

    def trace_slopes(self):
        """Spatial derivative of the solution on each side of every shock."""
        act = np.nonzero(self.active)[0]
        idx_of = np.full(self.x0.size, -1)
        idx_of[act] = np.arange(act.size)
        X, ux = self.X[act], self.dv[act] / self.dX[act]
        out = []
        for s, (L, R) in zip(self.shocks, self.stencils(idx_of)):
            out.append((lagrange_eval(X[L], ux[L], s.phi), lagrange_eval(X[R], ux[R], s.phi)))
        return out

    # -- time stepping
    def _rates(self, X, v, dX, dv, phi, stencils):
        nl = self.nl
        rate = [nl.fp(v), nl.g(v), nl.fpp(v) * dv, nl.gp(v) * dv]
        dphi = np.empty_like(phi)
        for j, (s, (L, R)) in enumerate(zip(self.shocks, stencils)):
            ul = lagrange_eval(X[L], v[L], phi[j]) if len(L) else self.last_trace[(s.left, 1)]
            ur = lagrange_eval(X[R], v[R], phi[j]) if len(R) else self.last_trace[(s.right, 0)]
            dphi[j] = slope(nl, ul, ur)
        return rate, dphi

    def _rk4(self, state, phi, stencils, dt):
        def add(a, b, c):
            return [x + c * y for x, y in zip(a, b)]
        k1, p1 = self._rates(*state, phi, stencils)
        k2, p2 = self._rates(*add(state, k1, dt / 2), phi + dt / 2 * p1, stencils)
        k3, p3 = self._rates(*add(state, k2, dt / 2), phi + dt / 2 * p2, stencils)
        k4, p4 = self._rates(*add(state, k3, dt), phi + dt * p3, stencils)
        new = [s + dt / 6 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
        return new, phi + dt / 6 * (p1 + 2 * p2 + 2 * p3 + p4)

    def step(self, dt):
        if self.halted:
            raise WavesError("field halted", t=self.t)
        act = np.nonzero(self.active)[0]
        idx_of = np.full(self.x0.size, -1)
        idx_of[act] = np.arange(act.size)
        stencils = self.stencils(idx_of)
        state = [self.X[act], self.v[act], self.dX[act], self.dv[act]]
        phi = np.array([s.phi for s in self.shocks])
        new, new_phi = self._rk4(state, phi, stencils, dt)
        h = dt
        broken = new[2] <= 0
        if np.any(broken):
            # locate the first breaking time inside the step by bisection
            lo, hi = 0.0, dt
            while hi - lo > 1e-12 * dt:
                mid = 0.5 * (lo + hi)
                trial, _ = self._rk4(state, phi, stencils, mid)
                if np.any(trial[2] <= 0):
                    hi = mid
                else:
                    lo = mid
            at_hi, _ = self._rk4(state, phi, stencils, hi)
            hit = np.nonzero(at_hi[2] <= 0)[0]
            for i in hit:
                self.breaks.append({"t": self.t + hi, "x": float(at_hi[0][i]), "seed": float(self.x0[act[i]])})
            self.events.append(("breaking", self.t + hi, len(hit)))
            if self.policy.breaking == "halt":
                new, new_phi = self._rk4(state, phi, stencils, lo)
                h = lo
                self.halted = True
            else:
                self.status[act[hit]] = BROKEN
                broken = np.zeros(act.size, dtype=bool)
        self.X[act], self.v[act], self.dX[act], self.dv[act] = new
        for s, p in zip(self.shocks, new_phi):
            s.phi = float(p)
        self.t += h
        self.steps += 1
        lo, hi = self.nl.domain
        bad = (self.v[act] < lo) | (self.v[act] > hi)
        if np.any(bad):
            raise DomainExit(f"characteristic value left the domain at t={self.t:.6g}",
                             t=self.t, value=float(self.v[act][bad][0]))
        n_events = self._absorb()
        n_events += self._merge()
        self._check_lax()
        if n_events > MAX_EVENTS:
            raise EventCascadeOverflow(f"{n_events} events in one step", t=self.t)
        if self.policy.reseed and not self.halted and self.steps % self.policy.reseed_every == 0:
            self._reseed()
        self._record()
        return self

    def _absorb(self):
        count = 0
        for s in self.shocks:
            for rid, side in ((s.left, 1), (s.right, 0)):
                m = self.region_members(rid)
                if not m.size:
                    continue
                hit = self.X[m] >= s.phi - ABSORB_TOL if side == 1 else self.X[m] <= s.phi + ABSORB_TOL
                if np.any(hit):
                    # remember the trace in case the region empties entirely
                    self.last_trace[(rid, side)] = float(self.v[m[hit][0 if side == 1 else -1]])
                    self.status[m[hit]] = ABSORBED
                    count += int(np.sum(hit))
        if count:
            self.events.append(("absorbed", self.t, count))
        return count

    def _merge(self):
        count = 0
        j = 0
        while j < len(self.shocks) - 1:
            a, b = self.shocks[j], self.shocks[j + 1]
            if a.phi >= b.phi:
                mid = a.right
                self.status[(self.region == mid) & (self.status == ACTIVE)] = ABSORBED
                kind = "background" if "background" in (a.curve.kind, b.curve.kind) else "small"
                merged = Shock(0.5 * (a.phi + b.phi), a.left, b.right, ShockCurve(kind))
                self.shocks[j:j + 2] = [merged]
                self.region_ids.remove(mid)
                self.events.append(("merge", self.t, merged.phi))
                count += 1
            else:
                j += 1
        return count

    def _check_lax(self):
        for j, (s, (ul, ur)) in enumerate(zip(list(self.shocks), self.traces())):
            sp = slope(self.nl, ul, ur)
            ml, mr = self.nl.fp(ul) - sp, sp - self.nl.fp(ur)
            if ml > 0 and mr > 0:
                continue
            if self.policy.lax == "remove":
                self.region[self.region == s.right] = s.left
                self.region_ids.remove(s.right)
                self.shocks.remove(s)
                for o in self.shocks:
                    if o.left == s.right:
                        o.left = s.left
                order = np.lexsort((self.X, self.region))
                self._reorder(order)
                self.events.append(("lax-removed", self.t, s.phi))
                continue
            err = ShockDies if s.curve.kind == "small" else ShockLost
            raise err(f"Lax margin lost at t={self.t:.6g}, phi={s.phi:.6g}",
                      t=self.t, phi=s.phi, margins=[float(ml), float(mr)])

    def _reorder(self, order):
        for name in ("x0", "X", "v", "dX", "dv", "region", "status"):
            setattr(self, name, getattr(self, name)[order])

    def _reseed(self):
        """Fill stretched gaps.  Midpoints whose seeds are resolvable in x0 are re-integrated
        from t=0; below that resolution the new characteristic is interpolated in X."""
        if self.x0.size >= self.policy.max_characteristics:
            return
        exact_x0, exact_reg = [], []
        interp = []
        for rid in self.region_ids:
            m = self.region_members(rid)
            if m.size < 2:
                continue
            gaps = np.diff(self.X[m])
            big = np.nonzero(gaps > self.policy.reseed_factor * self.spacing[rid])[0]
            for i in big:
                a, b = m[i], m[i + 1]
                gap = abs(self.x0[b] - self.x0[a])
                if np.isfinite(gap) and gap > X0_RESOLUTION * max(1.0, abs(self.x0[a])):
                    exact_x0.append(0.5 * (self.x0[a] + self.x0[b]))
                    exact_reg.append(rid)
                else:
                    interp.append((a, b, rid))
        if not exact_x0 and not interp:
            return
        parts = []
        if exact_x0:
            x0 = np.array(exact_x0)
            v0, dv0 = self.initial_state(x0)
            parts.append((x0, *integrate_characteristics(self.nl, x0, v0, dv0, self.t), exact_reg))
        if interp:
            a = np.array([i for i, _, _ in interp])
            b = np.array([j for _, j, _ in interp])
            H = self.X[b] - self.X[a]
            ma, mb = self.dv[a] / self.dX[a], self.dv[b] / self.dX[b]
            va, vb = self.v[a], self.v[b]
            v = 0.5 * (va + vb) + (ma - mb) * H / 8.0
            ux = 1.5 * (vb - va) / H - 0.25 * (ma + mb)
            dX = np.sqrt(self.dX[a] * self.dX[b])
            # interpolated characteristics have no seed
            parts.append((np.full(a.size, np.nan), 0.5 * (self.X[a] + self.X[b]), v, dX,
                          ux * dX, [r for _, _, r in interp]))
        for x0, X, v, dX, dv, reg in parts:
            self.x0 = np.concatenate([self.x0, x0])
            self.X = np.concatenate([self.X, X])
            self.v = np.concatenate([self.v, v])
            self.dX = np.concatenate([self.dX, dX])
            self.dv = np.concatenate([self.dv, dv])
            self.region = np.concatenate([self.region, np.array(reg, dtype=int)])
            self.status = np.concatenate([self.status, np.full(x0.size, ACTIVE)])
        self._reorder(np.lexsort((self.X, self.region)))
        self.events.append(("reseed", self.t, len(exact_x0) + len(interp)))

    def _record(self):
        for s, (ul, ur) in zip(self.shocks, self.traces()):
            s.curve.add(self.nl, self.t, s.phi, ul, ur)

    def advance(self, t_end, dt, callback=None):
        """Fixed steps of size dt (the last one shortened) up to t_end or a halt."""
        if callback is not None:
            callback(self)
        while self.t < t_end - 1e-12 * max(1.0, t_end) and not self.halted:
            self.step(min(dt, t_end - self.t))
            if callback is not None:
                callback(self)
        return self

    # -- read-out
    def slope_values(self):
        """du/dx on every active characteristic."""
        act = self.active
        return self.dv[act] / self.dX[act]

    def shock_curves(self):
        return [s.curve for s in self.shocks]

    def summary(self):
        return {"t": self.t, "characteristics": int(self.x0.size),
                "active": int(np.sum(self.active)), "shocks": [s.phi for s in self.shocks],
                "halted": self.halted, "breaks": self.breaks[:10]}


def _seed_points(profile, perturbation, sampling, lo, hi):
    specials = [x for x, _ in profile.characteristic_points] + list(perturbation.pins)
    specials += list(profile.positions) + list(perturbation.jumps)
    finite = [s for s in specials if math.isfinite(s)]
    if sampling.window is not None:
        wlo, whi = sampling.window
    else:
        c_lo = min(finite) if finite else 0.0
        c_hi = max(finite) if finite else 0.0
        wlo, whi = c_lo - sampling.span, c_hi + sampling.span
    a, b = max(lo, wlo), min(hi, whi)
    if b <= a:
        return np.array([])
    n = max(int(math.ceil((b - a) / sampling.h)), sampling.min_per_region)
    pts = list(np.linspace(a, b, n + 1))
    if math.isfinite(lo) and a == lo:
        pts = pts[1:]
    if math.isfinite(hi) and b == hi:
        pts = pts[:-1]
    for c in specials:
        if a - sampling.h <= c <= b + sampling.h:
            pts += _graded(c, lo, hi, sampling.h, sampling.ratio, sampling.min_offset)
    for c in perturbation.pins:
        if lo < c < hi:
            pts.append(c)
    if perturbation.support is not None:
        s_lo, s_hi = perturbation.support
        hs = perturbation.h or sampling.h / 4
        s_lo, s_hi = max(s_lo, a), min(s_hi, b)
        if s_hi > s_lo:
            pts += list(np.linspace(s_lo, s_hi, int(math.ceil((s_hi - s_lo) / hs)) + 1))
    pts = np.unique(np.array([p for p in pts if lo < p < hi]))
    return pts


def init_field(profile: WaveProfile, nl: Nonlinearity, perturbation: Perturbation | None = None,
               sampling: Sampling | None = None, policy: Policy | None = None) -> CharacteristicField:
    """Seed characteristics for the data profile + perturbation and set up tracked shocks."""
    perturbation = perturbation or Perturbation()
    sampling = sampling or Sampling()
    policy = policy or Policy()
    fld = CharacteristicField(nl, profile, perturbation, sampling, policy)
    bounds = sorted(set(list(profile.positions) + list(perturbation.jumps)))
    edges = [-math.inf] + bounds + [math.inf]
    seeds, regs = [], []
    for r in range(len(edges) - 1):
        pts = _seed_points(profile, perturbation, sampling, edges[r], edges[r + 1])
        seeds.append(pts)
        regs.append(np.full(pts.size, r))
        gaps = np.diff(pts)
        fld.spacing[r] = float(np.max(gaps)) if gaps.size else sampling.h
    fld.region_ids = list(range(len(edges) - 1))
    fld.x0 = np.concatenate(seeds)
    fld.region = np.concatenate(regs).astype(int)
    v, dv = fld.initial_state(fld.x0)
    lo, hi = nl.domain
    if np.any((v < lo) | (v > hi)) or not np.all(np.isfinite(v)):
        raise DomainExit("initial data leaves the domain of the nonlinearity")
    fld.X = fld.x0.copy()
    fld.v = v
    fld.dX = np.ones_like(v)
    fld.dv = dv
    fld.status = np.full(v.size, ACTIVE)
    background = set(float(d) for d in profile.positions)
    for r, d in enumerate(bounds):
        kind = "background" if d in background else "small"
        fld.shocks.append(Shock(float(d), r, r + 1, ShockCurve(kind)))
    for s in fld.shocks:
        for rid, side in ((s.left, 1), (s.right, 0)):
            m = fld.region_members(rid)
            if m.size:
                fld.last_trace[(rid, side)] = float(fld.v[m[-1] if side == 1 else m[0]])
            if m.size < 4:
                log.warning("region %d holds %d characteristics next to a shock", rid, m.size)
    fld._check_lax()
    fld._record()
    return fld


def step(fld: CharacteristicField, dt: float) -> CharacteristicField:
    return fld.step(dt)


def reconstruct(fld: CharacteristicField, grid) -> Snapshot:
    """Solution on a grid: cubic Hermite interpolation of v against X in each region, using
    the carried slopes dv/dX; the unperturbed wave outside the sampled range."""
    grid = np.asarray(grid, dtype=float)
    u = np.asarray(fld.profile.eval(grid - fld.profile.sigma * fld.t), dtype=float).copy()
    labels = np.full(grid.size, -1)
    phis = [s.phi for s in fld.shocks]
    edges = [-math.inf] + phis + [math.inf]
    coarse = False
    step_size = float(np.min(np.diff(grid))) if grid.size > 1 else math.inf
    for k, rid in enumerate(fld.region_ids):
        sel = (grid > edges[k]) & (grid <= edges[k + 1])
        labels[sel] = rid
        brk = np.nonzero((fld.region == rid) & (fld.status == BROKEN))[0]
        m = fld.region_members(rid)
        if brk.size and np.any(sel):
            xb = fld.X[brk]
            if np.any((xb >= grid[sel].min()) & (xb <= grid[sel].max())):
                raise BrokenRegion(f"region {rid} holds broken characteristics", region=int(rid))
        if m.size < 2 or not np.any(sel):
            continue
        X, v, dv = fld.X[m], fld.v[m], fld.dv[m] / fld.dX[m]
        # characteristics closer than rounding carry the same value
        keep = np.concatenate([[True], np.diff(X) > 1e-14 * max(1.0, float(np.max(np.abs(X))))])
        X, v, dv = X[keep], v[keep], dv[keep]
        if X.size < 2:
            continue
        inside = sel & (grid >= X[0]) & (grid <= X[-1])
        if np.any(inside):
            u[inside] = CubicHermiteSpline(X, v, dv)(grid[inside])
            lo, hi = grid[inside].min(), grid[inside].max()
            gaps = np.diff(X[(X >= lo) & (X <= hi)])
            if gaps.size and np.max(gaps) > 10 * step_size:
                coarse = True
    if coarse:
        warnings.warn("characteristic spacing exceeds ten grid steps", ResolutionWarning)
    shocks = [(s.phi, ul, ur) for s, (ul, ur) in zip(fld.shocks, fld.traces())]
    return Snapshot(fld.t, grid, u, labels, shocks, coarse)


# ---------------------------------------------------------------- experiment results

@dataclass
class ExperimentResult:
    name: str
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    table: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def compare(self, quantity, predicted, measured, ok, note=""):
        self.table.append({"quantity": quantity, "predicted": predicted, "measured": measured,
                           "pass": bool(ok), "note": note})

    @property
    def passed(self):
        return all(r["pass"] for r in self.table)

    def summary(self):
        return {"experiment": self.name, "params": self.params,
                "fits": {k: v.to_dict() for k, v in self.fits.items()},
                "table": self.table, "pass": self.passed}

    def to_json(self):
        return json.dumps(self.summary(), indent=2, default=_jsonable)

    def series_csv(self):
        keys = list(self.series)
        n = max((len(self.series[k]) for k in keys), default=0)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for i in range(n):
            w.writerow([repr(float(self.series[k][i])) if i < len(self.series[k]) else ""
                        for k in keys])
        return buf.getvalue()


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    return str(o)
