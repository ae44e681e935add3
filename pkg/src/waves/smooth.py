"""Smooth compactly supported helpers used by perturbations and extensions."""
import numpy as np


def bump(t):
    """exp(-1/(1-t^2)) on (-1, 1), zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out if out.ndim else float(out)


def bump_deriv(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1.0
    tm = t[m]
    out[m] = np.exp(-1.0 / (1.0 - tm ** 2)) * (-2.0 * tm / (1.0 - tm ** 2) ** 2)
    return out if out.ndim else float(out)


def odd_bump(t):
    """t * bump(t): vanishes at 0 with slope exp(-1)."""
    t = np.asarray(t, dtype=float)
    return t * bump(t)


def odd_bump_deriv(t):
    t = np.asarray(t, dtype=float)
    return bump(t) + t * bump_deriv(t)


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-1.0 / t[m])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t<=0, 1 for t>=1."""
    t = np.asarray(t, dtype=float)
    a, b = _psi(t), _psi(1.0 - t)
    out = a / (a + b)
    return out if out.ndim else float(out)


def smooth_step_deriv(t):
    t = np.asarray(t, dtype=float)
    a, b = _psi(t), _psi(1.0 - t)
    da = np.zeros_like(t)
    db = np.zeros_like(t)
    m = t > 0
    da[m] = a[m] / t[m] ** 2
    m = t < 1
    db[m] = -b[m] / (1.0 - t[m]) ** 2
    s = a + b
    out = (da * s - a * (da + db)) / s ** 2
    return out if out.ndim else float(out)


# norms of the unit bump, used by the instability-at-infinity construction
BUMP_SUP = float(np.exp(-1.0))


def bump_lp_norm(p, shape=bump):
    """L^p norm of ``shape`` on (-1, 1); p may be np.inf."""
    from scipy.integrate import quad
    if np.isinf(p):
        ts = np.linspace(-1, 1, 20001)
        return float(np.max(np.abs(shape(ts))))
    val, _ = quad(lambda s: abs(shape(s)) ** p, -1, 1, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val ** (1.0 / p)


def _psi_derivs(t, nmax):
    """Derivatives of exp(-1/t) (zero for t <= 0) up to order nmax."""
    t = np.asarray(t, dtype=float)
    out = [np.zeros_like(t) for _ in range(nmax + 1)]
    m = t > 0
    if not np.any(m):
        return out
    s = 1.0 / t[m]
    e = np.exp(-s)
    poly = np.polynomial.Polynomial([1.0])
    sq = np.polynomial.Polynomial([0.0, 0.0, 1.0])
    for n in range(nmax + 1):
        out[n][m] = poly(s) * e
        poly = sq * (poly - poly.deriv())
    return out


def smooth_step_derivs(t, nmax):
    """[S, S', ..., S^(nmax)] for the C-infinity step ``smooth_step``."""
    from math import comb
    t = np.asarray(t, dtype=float)
    a = _psi_derivs(t, nmax)
    b = _psi_derivs(1.0 - t, nmax)
    ab = [a[n] + (-1) ** n * b[n] for n in range(nmax + 1)]
    S = []
    for n in range(nmax + 1):
        acc = a[n].copy()
        for k in range(n):
            acc -= comb(n, k) * S[k] * ab[n - k]
        S.append(acc / ab[0])
    return S
