"""Concrete spectral constructions around a wave: the linearized operator on a grid,
Weyl-sequence quotients, Dirac adjoint eigenvectors, damping weights, the explicit
resolvent of the front-localized operators and the star-norm."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_trapezoid, quad
from scipy.interpolate import CubicSpline

from .errors import GridTooCoarse, InsufficientSmoothness, SpectralSide, SupportLeak, WindowNotConverged
from .nonlinearity import Nonlinearity, VectorField, series_compose
from .profile import WaveProfile
from .smooth import bump, bump_deriv


@dataclass
class GridFunction:
    grid: np.ndarray
    values: np.ndarray
    piece_index: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values)
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")


@dataclass
class DiracLadder:
    x_star: float
    coefficients: list
    eigenvalue: float
    a_taylor: list = field(default_factory=list)   # derivatives of f'(U)-sigma at x_star
    b_taylor: list = field(default_factory=list)   # derivatives of g'(U) at x_star

    def to_dict(self):
        return {"x_star": self.x_star, "coefficients": list(self.coefficients),
                "eigenvalue": self.eigenvalue}


# ---------------------------------------------------------------- finite differences

def fd_weights(nodes, x0, m):
    """Weights of the m-th derivative at x0 from values at ``nodes`` (exact on polynomials)."""
    n = len(nodes)
    z = np.asarray(nodes, dtype=float) - x0
    scale = max(np.max(np.abs(z)), 1e-300)
    V = np.vander(z / scale, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[m] = math.factorial(m)
    return np.linalg.solve(V, rhs) / scale ** m


def fd_derivative(x, y, m=1, width=5):
    """Derivative of order m of samples y(x), centered where possible, one-sided at the ends."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    n = len(x)
    if n < width:
        raise GridTooCoarse(f"need at least {width} samples", samples=n)
    out = np.empty(n, dtype=np.result_type(y, float))
    half = width // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = slice(lo, lo + width)
        out[i] = fd_weights(x[idx], x[i], m) @ y[idx]
    return out


def _extrapolate(x, y, x0):
    w = fd_weights(x, x0, 0)
    return w @ y


# ---------------------------------------------------------------- operator

def _coefficients(profile, nl, xs):
    U = profile(xs)
    return nl.fp(U) - profile.sigma, nl.gp(U)


def apply_L(profile: WaveProfile, nl: Nonlinearity, w: GridFunction, y=None):
    """Smooth part -(a w)' + b w on each piece; jump part from one-sided traces."""
    xs = w.grid
    d = profile.positions
    if len(d) and np.min(np.abs(xs[:, None] - d[None, :])) < 1e-12:
        raise GridTooCoarse("grid sample on a discontinuity")
    idx = profile.piece_index(xs)
    a, b = _coefficients(profile, nl, xs)
    aw = a * w.values
    out = np.empty(len(xs), dtype=np.result_type(w.values, float))
    for k in np.unique(idx):
        sel = np.nonzero(idx == k)[0]
        if len(sel) < 8:
            raise GridTooCoarse(f"piece {k} has {len(sel)} samples (need 8)", piece=int(k))
        out[sel] = -fd_derivative(xs[sel], aw[sel]) + b[sel] * w.values[sel]
    y = np.zeros(len(d)) if y is None else np.asarray(y)
    jy = np.zeros(len(d), dtype=np.result_type(y, w.values, float))
    for k, j in enumerate(profile.discontinuities):
        left = np.nonzero(idx == k)[0][-5:]
        right = np.nonzero(idx == k + 1)[0][:5]
        if len(left) < 5 or len(right) < 5:
            raise GridTooCoarse("need five samples on each side of a jump")
        jump_aw = _extrapolate(xs[right], aw[right], j.d) - _extrapolate(xs[left], aw[left], j.d)
        jump_U = j.u_right - j.u_left
        jump_g = nl.g(j.u_right) - nl.g(j.u_left)       # [a U'] = [g(U)]
        jy[k] = (y[k] * jump_g + jump_aw) / jump_U
    return GridFunction(xs, out, idx), jy


# ---------------------------------------------------------------- Weyl quotient

def _tail_side(profile, side):
    piece = profile.pieces[-1] if side > 0 else profile.pieces[0]
    iv = piece.interval
    if not math.isinf(iv[1] if side > 0 else iv[0]):
        raise SupportLeak("profile has no unbounded piece on that side")
    return piece


def weyl_quotient(profile: WaveProfile, nl: Nonlinearity, xi: float, eps: float, p=np.inf,
                  q=np.inf, chi=bump, dchi=bump_deriv, side=1, lam_shift=0.0, amplitude=1.0):
    """||(lam - L) w|| _{L^p} / ||w||_{L^q} for w = exp(i kappa x) chi(eps x -+ 1/eps), with
    lam = g'(u_inf) + i xi (+ lam_shift) and kappa = -xi / (f'(u_inf) - sigma)."""
    piece = _tail_side(profile, side)
    u_inf = piece.right_limit if side > 0 else piece.left_limit
    sigma = profile.sigma
    a_inf = nl.fp(u_inf) - sigma
    lam = nl.gp(u_inf) + 1j * xi + lam_shift
    kappa = -xi / a_inf
    center = side / eps ** 2
    lo, hi = center - 1.0 / eps, center + 1.0 / eps
    marks = list(profile.positions) + [x for x, _ in profile.characteristic_points]
    iv = piece.interval
    if any(lo <= m <= hi for m in marks) or lo < iv[0] or hi > iv[1]:
        raise SupportLeak("bump support meets a discontinuity or characteristic point",
                          support=[lo, hi])

    def x_of(s):
        return (s + side / eps) / eps

    def residual(s):
        x = x_of(s)
        U = piece(x)
        dU = piece(x, 1)
        a = nl.fp(U) - sigma
        da = nl.fpp(U) * dU
        b = nl.gp(U)
        phase = np.exp(1j * kappa * x)
        w = amplitude * phase * chi(s)
        return (lam - b + da + 1j * kappa * a) * w + a * eps * amplitude * phase * dchi(s)

    def weyl(s):
        return amplitude * chi(s)

    if np.isinf(p):
        ss = np.linspace(-1, 1, 20001)
        num = float(np.max(np.abs(residual(ss))))
    else:
        val, _ = quad(lambda s: abs(residual(s)) ** p, -1, 1, epsabs=1e-12, epsrel=1e-12, limit=400)
        num = (val / eps) ** (1.0 / p)
    if np.isinf(q):
        ss = np.linspace(-1, 1, 20001)
        den = float(np.max(np.abs(weyl(ss))))
    else:
        val, _ = quad(lambda s: abs(weyl(s)) ** q, -1, 1, epsabs=1e-14, epsrel=1e-12, limit=400)
        den = (val / eps) ** (1.0 / q)
    return num / den


def weyl_sweep(profile, nl, xi, eps_values, p=np.inf, q=np.inf, **kw):
    """Quotients over eps and the fitted log-log slope."""
    eps_values = np.asarray(eps_values, dtype=float)
    vals = np.array([weyl_quotient(profile, nl, xi, e, p, q, **kw) for e in eps_values])
    slope = float(np.polyfit(np.log(eps_values), np.log(vals), 1)[0])
    return vals, slope


def weyl_expected_rate(p, q):
    inv = lambda r: 0.0 if np.isinf(r) else 1.0 / r
    return 1.0 - inv(p) + inv(q)


# ---------------------------------------------------------------- Taylor data and ladder

def profile_taylor(profile: WaveProfile, nl: Nonlinearity, u_star: float, order: int):
    """Derivatives of U, f'(U)-sigma and g'(U) at the characteristic point (orders 0..order)."""
    vf = VectorField(nl, profile.sigma, [u_star])
    p = vf.taylor_at_char(u_star, order)
    inner = np.concatenate([[0.0], p[1:]])
    need_f = order + 1
    if nl.f_order < need_f or nl.g_order < order + 1:
        raise InsufficientSmoothness(f"order {order} needs f^({need_f}) and g^({order + 1})")
    fp_series = np.array([nl.df(k + 1, u_star) / math.factorial(k) for k in range(order + 1)])
    fp_series[0] -= profile.sigma
    gp_series = np.array([nl.dg(k + 1, u_star) / math.factorial(k) for k in range(order + 1)])
    a = series_compose(fp_series, inner, order + 1)
    b = series_compose(gp_series, inner, order + 1)
    fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
    return p * fact, a * fact, b * fact


def adjoint_ladder(profile: WaveProfile, nl: Nonlinearity, ell: int, which: int = 0) -> DiracLadder:
    """Coefficients c_0..c_ell of sum c_j delta^(j) at x_star in the kernel of the adjoint of
    (lam - L) with lam = -ell g'(u_star)."""
    cps = profile.characteristic_points
    if not cps:
        raise InsufficientSmoothness("profile has no characteristic point")
    x_star, u_star = cps[which]
    _, a, b = profile_taylor(profile, nl, u_star, ell + 1)
    gamma = float(nl.gp(u_star))
    if gamma == 0:
        raise InsufficientSmoothness("g' vanishes at the characteristic value")
    lam = -ell * gamma
    M = ladder_matrix(a, b, lam, ell)
    c = np.zeros(ell + 1)
    c[ell] = 1.0
    for m in range(ell - 1, -1, -1):
        acc = sum(c[j] * (-1) ** j * M[j, m] for j in range(m + 1, ell + 1))
        c[m] = -(-1) ** m * acc / M[m, m]
    return DiracLadder(float(x_star), c.tolist(), float(lam), a.tolist(), b.tolist())


def ladder_matrix(a, b, lam, ell):
    """M[j, m]: coefficient of phi^(m)(x*) in the j-th derivative of lam phi + (a phi)' - b phi."""
    M = np.zeros((ell + 1, ell + 1))
    for j in range(ell + 1):
        for m in range(j + 1):
            M[j, m] = (lam if j == m else 0.0) + math.comb(j + 1, m) * a[j + 1 - m] \
                - math.comb(j, m) * b[j - m]
    return M


# ---------------------------------------------------------------- damping weights

def _front_data(profile):
    if len(profile.pieces) != 1 or len(profile.characteristic_points) != 1:
        raise SpectralSide("weights and resolvents are defined for continuous fronts")
    return profile.pieces[0], profile.characteristic_points[0]


def theta_k(profile, nl, k):
    _, (_, u_star) = _front_data(profile)
    lo, hi = profile.endstates
    return float(min(k * nl.gp(u_star), -nl.gp(lo), -nl.gp(hi)))


class Weight:
    """chi_k for a front, with its primitive from the characteristic point."""

    def __init__(self, profile: WaveProfile, nl: Nonlinearity, k: int, window=40.0, n=40001):
        piece, (x_star, u_star) = _front_data(profile)
        self.profile, self.nl, self.k = profile, nl, k
        self.x_star = x_star
        self.theta = theta_k(profile, nl, k)
        self.vf = VectorField(nl, profile.sigma, [u_star])
        self.u_star = u_star
        sigma = profile.sigma
        # numerator theta - q_k and a as power series in (u - u_star)
        order = min(nl.f_order - 2, nl.g_order - 1, 6)
        F = self.vf.quotient_coeffs(u_star)[:order + 1]
        fpp = np.array([nl.df(j + 2, u_star) / math.factorial(j) for j in range(order + 1)])
        gp = np.array([nl.dg(j + 1, u_star) / math.factorial(j) for j in range(order + 1)])
        a_ser = np.array([nl.df(j + 1, u_star) / math.factorial(j) for j in range(order + 2)])
        a_ser[0] -= sigma
        q = (k + 1) * np.convolve(fpp, F)[:order + 1] - gp
        num = -q
        num[0] += self.theta
        self._series = None
        if abs(num[0]) <= 1e-12 * max(1.0, abs(self.theta)):
            from .nonlinearity import series_divide
            self._series = series_divide(num[1:], a_ser[1:], order)
        self._series_radius = 1e-3 * nl.state_scale
        xs = np.linspace(x_star - window, x_star + window, n)
        self.grid = xs
        vals = self(xs)
        prim = cumulative_trapezoid(vals, xs, initial=0.0)
        i0 = np.searchsorted(xs, x_star)
        prim -= np.interp(x_star, xs, prim)
        del i0
        self._prim = CubicSpline(xs, prim)

    def q(self, x):
        """k a' - a U''/U' along the front, i.e. (k+1) a' - g'(U)."""
        U = self.profile(x)
        return (self.k + 1) * self.nl.fpp(U) * self.vf.F(U) - self.nl.gp(U)

    def a(self, x):
        return self.nl.fp(self.profile(x)) - self.profile.sigma

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        U = self.profile(x)
        a = self.a(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (self.theta - self.q(x)) / a
        if self._series is not None:
            near = np.abs(U - self.u_star) < self._series_radius
            r = np.where(near, np.polynomial.polynomial.polyval(U - self.u_star, self._series), r)
        else:
            r = np.where(np.isfinite(r), r, 0.0)
        rel = x - self.x_star
        out = np.where(rel > 0, np.maximum(r, 0.0), np.minimum(r, 0.0))
        out = np.where(rel == 0, 0.0, out)
        return out if out.ndim else float(out)

    def integral(self, x):
        """int_{x_star}^x chi_k; constant continuation outside the tabulated window."""
        x = np.clip(np.asarray(x, dtype=float), self.grid[0], self.grid[-1])
        return self._prim(x)

    def margin(self, xs):
        """k a' - a U''/U' + a chi_k - theta_k on the samples (should be >= 0)."""
        return self.q(xs) + self.a(xs) * self(xs) - self.theta


def weight_chi(profile: WaveProfile, nl: Nonlinearity, k: int, **kw) -> Weight:
    return Weight(profile, nl, k, **kw)


def theta_a_k(profile, nl, weight: Weight, a, da, xs):
    """inf over the samples of k a' - a U''/U' + a chi_k for a coefficient a(x)."""
    U = profile(xs)
    ratio = weight.vf.dF(U)
    return float(np.min(weight.k * da(xs) - a(xs) * ratio + a(xs) * weight(xs)))


# ---------------------------------------------------------------- resolvent

_GL_X, _GL_W = leggauss(24)


class Resolvent:
    """Solves (lam - L_{a,k}) v = A with L_{a,k} = -a (d/dx - U''/U') - k a'.

    The explicit integral from the characteristic point is evaluated after peeling
    the singular part c/y of B/a, c = (lam + k a'(0))/a'(0), and substituting
    y = x tau^m so that the integrand is smooth in tau.
    """

    def __init__(self, profile, nl, a, da, k, lam, window=30.0, h=2e-3, panels=12):
        piece, (x_star, u_star) = _front_data(profile)
        self.profile, self.nl, self.a, self.da, self.k, self.lam = profile, nl, a, da, k, complex(lam)
        self.x_star = x_star
        self.vf = VectorField(nl, profile.sigma, [u_star])
        slope0 = float(da(np.array([x_star]))[0])
        if slope0 <= 0:
            raise SpectralSide("a'(0) must be positive")
        self.slope0 = slope0
        self.c = (self.lam + k * slope0) / slope0
        if self.c.real <= 0:
            raise SpectralSide("Re(lambda) <= -k a'(0)", c=str(self.c))
        # tau^(m c - 1) is smooth enough for Gauss-Legendre once Re(m c) is a few units
        self.m = max(1, math.ceil(6.0 / self.c.real))
        self.panels = panels
        # primitive of the regular part R(y) = B(y)/a(y) - c/(y - x_star)
        ys = x_star + np.arange(-window, window + h / 2, h)
        ys = ys[(ys >= x_star - window) & (ys <= x_star + window)]
        R = self._R(ys)
        bad = ~np.isfinite(R) | (np.abs(ys - x_star) < 0.5 * h)
        if np.any(bad):
            good = np.nonzero(~bad)[0]
            for i in np.nonzero(bad)[0]:
                near = good[np.argsort(np.abs(good - i))[:4]]
                R[i] = fd_weights(ys[near], ys[i], 0) @ R[near]
        P = cumulative_trapezoid(R, ys, initial=0.0)
        # Simpson-like correction via spline integration for higher accuracy
        spl_r = CubicSpline(ys, R.real), CubicSpline(ys, R.imag)
        Pr = spl_r[0].antiderivative()
        Pi = spl_r[1].antiderivative()
        off = Pr(x_star) + 1j * Pi(x_star)
        self._P = lambda y: Pr(y) + 1j * Pi(y) - off
        del P
        self.window = (ys[0], ys[-1])

    def _B(self, y):
        U = self.profile(y)
        return self.lam + self.k * self.da(y) - self.a(y) * self.vf.dF(U)

    def _R(self, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._B(y) / self.a(y) - self.c / (y - self.x_star)

    def solve(self, A, xs):
        """v at the points xs for a callable right-hand side A."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty(len(xs), dtype=complex)
        edges = np.linspace(0.0, 1.0, self.panels + 1)
        tau = np.concatenate([0.5 * (e1 - e0) * _GL_X + 0.5 * (e0 + e1) for e0, e1 in zip(edges, edges[1:])])
        wts = np.concatenate([0.5 * (e1 - e0) * _GL_W for e0, e1 in zip(edges, edges[1:])])
        m, c = self.m, self.c
        s = tau ** m
        kern = m * tau ** (m * c - 1)          # s^(c-1) ds
        for i, x in enumerate(xs):
            r = x - self.x_star
            if r == 0.0:
                out[i] = A(np.array([x]))[0] / (self.lam + self.k * self.slope0)
                continue
            y = self.x_star + r * s
            Px = self._P(np.array([x]))[0]
            dy = y - self.x_star
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.abs(dy) > 1e-12, dy / self.a(y), 1.0 / self.slope0)
            integrand = kern * np.exp(self._P(y) - Px) * A(y) * ratio
            out[i] = np.sum(wts * integrand)
        return out

    def apply(self, w, dw, xs):
        """(lam - L_{a,k}) w for a callable w with derivative dw."""
        U = self.profile(xs)
        return self.lam * w(xs) + self.a(xs) * (dw(xs) - self.vf.dF(U) * w(xs)) + self.k * self.da(xs) * w(xs)


def default_coefficient(profile, nl):
    """a = f'(U) - sigma and its derivative, as callables."""
    vf = VectorField(nl, profile.sigma)
    a = lambda x: nl.fp(profile(x)) - profile.sigma
    da = lambda x: nl.fpp(profile(x)) * vf.F(profile(x))
    return a, da


def resolvent_solve(profile, nl, a, da, k, lam, A, xs, weight: Weight | None = None, check=True):
    """v solving (lam - L_{a,k}) v = A on xs; optionally verifies the weighted contraction."""
    weight = weight or Weight(profile, nl, k)
    th = theta_a_k(profile, nl, weight, a, da, weight.grid)
    if complex(lam).real <= -th:
        raise SpectralSide("Re(lambda) <= -theta_{a,k}", theta=th)
    res = Resolvent(profile, nl, a, da, k, lam)
    v = res.solve(A, xs)
    info = {"theta_a_k": th}
    if check:
        e = np.exp(-weight.integral(xs))
        lhs = float(np.max(np.abs(e * v)))
        rhs = float(np.max(np.abs(e * A(xs)))) / (complex(lam).real + th)
        info.update(weighted_v=lhs, bound=rhs, contraction=lhs <= rhs * (1 + 1e-9))
    return v, info


# ---------------------------------------------------------------- star norm and projector

def star_norm(profile, nl, v, dv, xs, weight: Weight | None = None):
    """sup |exp(-int chi_1) (v' - U''/U' v)| over xs."""
    weight = weight or Weight(profile, nl, 1)
    U = profile(xs)
    w = dv(xs) - weight.vf.dF(U) * v(xs)
    return float(np.max(np.abs(np.exp(-weight.integral(xs)) * w)))


def equivalence_constants(profile, nl, weight: Weight | None = None, start=10.0, max_window=160.0,
                          rtol=0.01):
    """(lower, upper) with lower <= ||v||_star / ||v||_{W^{1,inf}} <= upper on functions
    vanishing at the characteristic point."""
    weight = weight or Weight(profile, nl, 1)
    piece, (x_star, _) = _front_data(profile)
    vf = weight.vf

    def kernel_sup(L):
        xs = np.linspace(x_star - L, x_star + L, int(400 * L) + 1)
        dU = profile(xs, 1)
        inv = cumulative_trapezoid(1.0 / dU, xs, initial=0.0)
        inv -= np.interp(x_star, xs, inv)
        return float(np.max(np.abs(dU * inv))), xs

    L = start
    prev, xs = kernel_sup(L)
    while True:
        L *= 2
        if L > max_window:
            raise WindowNotConverged("kernel integral did not stabilise", window=L)
        cur, xs = kernel_sup(L)
        if abs(cur - prev) <= rtol * abs(cur):
            break
        prev = cur
    K = cur
    M = float(np.max(np.abs(vf.dF(profile(xs)))))
    I = weight.integral(xs)
    e_plus = float(np.max(np.exp(I)))
    e_minus = float(np.max(np.exp(-I)))
    lower = 1.0 / (max(K, 1.0 + M * K) * e_plus)
    upper = (1.0 + M) * e_minus
    return lower, upper, {"K": K, "M": M, "E_plus": e_plus, "E_minus": e_minus, "window": L}


def project_zero_mode(profile, A: GridFunction):
    """A(x*) U'/U'(x*)."""
    _, (x_star, _) = _front_data(profile)
    xs = A.grid
    i = int(np.argmin(np.abs(xs - x_star)))
    if xs[i] == x_star:
        a0 = A.values[i]
    else:
        lo = min(max(i - 2, 0), len(xs) - 5)
        sl = slice(lo, lo + 5)
        a0 = fd_weights(xs[sl], x_star, 0) @ A.values[sl]
    return GridFunction(xs, a0 * profile(xs, 1) / profile(x_star, 1), A.piece_index)


def key_derivative_identity_check(profile, nl, a, da, v, h, span=6.0):
    """max | D L_a v - L_{a,1} D v | with D = d/dx - U''/U' and second-order differences."""
    _, (x_star, _) = _front_data(profile)
    vf = VectorField(nl, profile.sigma)
    xs = np.arange(x_star - span, x_star + span + h / 2, h)
    U = profile(xs)
    ratio = vf.dF(U)

    def d1(y):
        out = np.empty_like(y)
        out[1:-1] = (y[2:] - y[:-2]) / (2 * h)
        out[0] = out[-1] = np.nan
        return out

    vv = v(xs)
    Dv = d1(vv) - ratio * vv
    La_v = -a(xs) * Dv
    lhs = d1(La_v) - ratio * La_v
    rhs = -a(xs) * (d1(Dv) - ratio * Dv) - da(xs) * Dv
    r = np.abs(lhs - rhs)[2:-2]
    return float(np.nanmax(r))
