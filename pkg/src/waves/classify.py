"""Non-degeneracy checks, structural sign summaries, stability verdicts and spectral data."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InternalInconsistency
from .nonlinearity import Nonlinearity, check_generic_pair
from .profile import WaveProfile, oleinik_violation

STABLE_CLASSES = ("Constant", "RiemannShock", "ContinuousFront", "SingleJumpComposite",
                  "DoubleJumpComposite")
MARGIN = 1e-10


@dataclass
class InstabilityWitness:
    kind: str                 # EndstateGrowth | BadJump | BadCharacteristic
    location: float           # position, or +-inf for endstates
    rate: float               # positive growth rate
    value: float              # the state involved (u_inf, u_star, or the left trace)
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        if math.isinf(self.location):
            d["location"] = "+inf" if self.location > 0 else "-inf"
        return d


@dataclass
class Classification:
    verdict: str
    witnesses: list = field(default_factory=list)
    reasons: list = field(default_factory=list)

    @property
    def stable(self):
        return self.verdict in STABLE_CLASSES or self.verdict == "GeneralStable"

    def to_dict(self):
        return {"verdict": self.verdict, "witnesses": [w.to_dict() for w in self.witnesses],
                "reasons": list(self.reasons)}


@dataclass
class SpectralReport:
    endstate_rates: list
    char_ladders: list
    jump_eigenvalues: list
    theta: float
    theta_k: list

    def to_dict(self):
        return {"endstate_rates": self.endstate_rates, "ladders": self.char_ladders,
                "jump_eigenvalues": self.jump_eigenvalues, "theta": self.theta,
                "theta_k": self.theta_k}


def _scales(nl):
    us = np.linspace(*nl.domain, 401)
    return (max(float(np.max(np.abs(nl.gp(us)))), 1.0), nl.flux_slope_scale,
            max(float(np.max(np.abs(nl.fpp(us)))), 1.0))


def _unbounded_endstates(profile):
    """(side, u_inf, piece) for the two infinities; piece None when that side is constant."""
    out = []
    first, last = profile.pieces[0], profile.pieces[-1]
    out.append((-1, first.left_limit, None if first.is_constant else first))
    out.append((1, last.right_limit, None if last.is_constant else last))
    return out


def _jump_quotient(nl, j):
    return float((nl.g(j.u_right) - nl.g(j.u_left)) / (j.u_right - j.u_left))


def _jump_between_constants(profile, k):
    return profile.pieces[k].is_constant and profile.pieces[k + 1].is_constant


def check_nondegenerate(profile: WaveProfile, nl: Nonlinearity) -> dict:
    """Measured margins of every non-degeneracy condition; ``ok`` is False on any violation."""
    gs, fs, f2s = _scales(nl)
    sigma = profile.sigma
    out = {"characteristic": [], "jumps": [], "endstates": [], "violations": []}
    for x, u in profile.characteristic_points:
        m = {"x": x, "u": u, "fpp": float(abs(nl.fpp(u))), "gp": float(nl.gp(u))}
        out["characteristic"].append(m)
        if m["fpp"] <= MARGIN * f2s:
            out["violations"].append(f"f''=0 at characteristic value {u}")
        if abs(m["gp"]) <= MARGIN * gs:
            out["violations"].append(f"g'=0 at characteristic value {u}")
    for j in profile.discontinuities:
        lax_l = float(nl.fp(j.u_left) - sigma)
        lax_r = float(sigma - nl.fp(j.u_right))
        vs = np.linspace(j.u_left, j.u_right, 102)[1:-1]
        ole = float(np.min((nl.f(vs) - nl.f(j.u_left)) / (vs - j.u_left)
                           - (nl.f(vs) - nl.f(j.u_right)) / (vs - j.u_right)))
        m = {"d": j.d, "lax_left": lax_l, "lax_right": lax_r, "oleinik": ole}
        out["jumps"].append(m)
        if min(lax_l, lax_r) <= MARGIN * fs:
            out["violations"].append(f"Lax margin {min(lax_l, lax_r):.3e} at d={j.d}")
        if oleinik_violation(nl, j.u_left, j.u_right, 100) is not None or ole <= 0:
            out["violations"].append(f"Oleinik fails at d={j.d}")
    for side, u, _ in _unbounded_endstates(profile):
        m = {"side": side, "u": u, "speed_gap": float(abs(nl.fp(u) - sigma)), "gp": float(nl.gp(u))}
        out["endstates"].append(m)
        if m["speed_gap"] <= MARGIN * fs:
            out["violations"].append(f"f'(u)=sigma at endstate {u}")
        if abs(m["gp"]) <= MARGIN * gs:
            out["violations"].append(f"g'=0 at endstate {u}")
    out["ok"] = not out["violations"]
    return out


def structure_report(profile: WaveProfile, nl: Nonlinearity, raise_on_error=True) -> dict:
    """Per-piece sign summary: characteristic values, g' signs, speed-gap signs between them,
    and the tail sign relations at the infinities."""
    sigma = profile.sigma
    pieces = []
    problems = []
    n = len(profile.pieces)
    for i, p in enumerate(profile.pieces):
        rec = {"interval": list(p.interval), "constant": p.is_constant,
               "unbounded": [math.isinf(p.interval[0]), math.isinf(p.interval[1])],
               "n_char": len(p.characteristic_points), "gp_signs": [], "gap_signs": []}
        if p.is_constant:
            pieces.append(rec)
            continue
        cps = p.characteristic_points
        rec["gp_signs"] = [int(np.sign(nl.gp(u))) for _, u in cps]
        lo, hi = p.interval
        cuts = [lo] + [x for x, _ in cps] + [hi]
        for a, b in zip(cuts, cuts[1:]):
            if math.isinf(a):
                a = b - 5.0
            if math.isinf(b):
                b = a + 5.0
            xm = 0.5 * (a + b)
            rec["gap_signs"].append(int(np.sign(nl.fp(p(xm)) - sigma)))
        if any(s1 == s2 for s1, s2 in zip(rec["gp_signs"], rec["gp_signs"][1:])):
            problems.append(f"piece {i}: g' signs do not alternate")
        if any(s1 == s2 for s1, s2 in zip(rec["gap_signs"], rec["gap_signs"][1:])):
            problems.append(f"piece {i}: f'(U)-sigma does not change sign at characteristic points")
        if len(cps) > 1 and not any(math.isinf(e) for e in p.interval):
            problems.append(f"piece {i}: bounded piece holds several characteristic points")
        if math.isinf(p.interval[1]):
            u = p.right_limit
            if np.sign(nl.fp(u) - sigma) != -np.sign(nl.gp(u)):
                problems.append(f"piece {i}: tail sign relation fails at +inf")
        if math.isinf(p.interval[0]):
            u = p.left_limit
            if np.sign(nl.fp(u) - sigma) != np.sign(nl.gp(u)):
                problems.append(f"piece {i}: tail sign relation fails at -inf")
        if not (math.isinf(p.interval[0]) and math.isinf(p.interval[1])) and len(cps) == 0 \
                and i not in (0, n - 1):
            problems.append(f"piece {i}: bounded non-constant piece without characteristic point")
        pieces.append(rec)
    report = {
        "pieces": pieces,
        "endstates": [{"side": s, "u": u, "gp": float(nl.gp(u))} for s, u, _ in _unbounded_endstates(profile)],
        "characteristic_values": [{"x": x, "u": u, "gp": float(nl.gp(u))}
                                  for x, u in profile.characteristic_points],
        "jumps": [{"d": j.d, "quotient": _jump_quotient(nl, j),
                   "between_constants": _jump_between_constants(profile, k)}
                  for k, j in enumerate(profile.discontinuities)],
        "problems": problems,
    }
    if problems and raise_on_error:
        raise InternalInconsistency("; ".join(problems), problems=problems)
    return report


def _shape(profile):
    kinds = ["C" if p.is_constant else f"S{len(p.characteristic_points)}" for p in profile.pieces]
    return "".join(kinds)


_SHAPES = {"C": "Constant", "CC": "RiemannShock", "S1": "ContinuousFront",
           "CS1": "SingleJumpComposite", "S1C": "SingleJumpComposite",
           "CS1C": "DoubleJumpComposite"}


def witnesses(profile: WaveProfile, nl: Nonlinearity):
    gs = _scales(nl)[0]
    out = []
    for side, u, _ in _unbounded_endstates(profile):
        r = float(nl.gp(u))
        if r > MARGIN * gs:
            out.append(InstabilityWitness("EndstateGrowth", side * math.inf, r, u))
    for k, j in enumerate(profile.discontinuities):
        if _jump_between_constants(profile, k):
            continue
        q = _jump_quotient(nl, j)
        if q > MARGIN * gs:
            out.append(InstabilityWitness("BadJump", j.d, q, j.u_left, {"u_right": j.u_right}))
    for x, u in profile.characteristic_points:
        gp = float(nl.gp(u))
        if gp < -MARGIN * gs:
            out.append(InstabilityWitness("BadCharacteristic", x, -gp, u, {"gp": gp}))
    return out


def classify(profile: WaveProfile, nl: Nonlinearity) -> Classification:
    """Stable class (one of five shapes), Unstable with witnesses, or Degenerate."""
    nd = check_nondegenerate(profile, nl)
    if not nd["ok"]:
        return Classification("Degenerate", reasons=nd["violations"])
    wit = witnesses(profile, nl)
    if wit:
        return Classification("Unstable", witnesses=wit)
    gs = _scales(nl)[0]
    # quantities inside the margin are neither stable nor unstable
    near = [f"jump quotient {q:.3e} within margin" for q in
            (_jump_quotient(nl, j) for k, j in enumerate(profile.discontinuities)
             if not _jump_between_constants(profile, k)) if q > -MARGIN * gs]
    if near:
        return Classification("Degenerate", reasons=near)
    name = _SHAPES.get(_shape(profile))
    if name is None:
        return Classification("GeneralStable",
                              reasons=[f"shape {_shape(profile)} outside the generic classes"])
    return Classification(name)


def brute_force_verdict(report: dict) -> str:
    """Independent re-derivation of the verdict from a structure report."""
    bad = any(e["gp"] > 0 for e in report["endstates"])
    bad |= any(j["quotient"] > 0 for j in report["jumps"] if not j["between_constants"])
    bad |= any(c["gp"] < 0 for c in report["characteristic_values"])
    if bad:
        return "Unstable"
    shape = "".join("C" if p["constant"] else f"S{p['n_char']}" for p in report["pieces"])
    return _SHAPES.get(shape, "GeneralStable")


def spectral_report(profile: WaveProfile, nl: Nonlinearity, K: int = 5) -> SpectralReport:
    end_rates = [float(nl.gp(u)) for _, u, _ in _unbounded_endstates(profile)]
    ladders = []
    char_g = []
    for x, u in profile.characteristic_points:
        gp = float(nl.gp(u))
        char_g.append(gp)
        ladders.append({"x": x, "u": u, "eigenvalues": [-k * gp for k in range(K + 1)]})
    jumps = [{"d": j.d, "eigenvalue": _jump_quotient(nl, j)} for j in profile.discontinuities]
    active_jumps = [_jump_quotient(nl, j) for k, j in enumerate(profile.discontinuities)
                    if not _jump_between_constants(profile, k)]
    base = [-r for r in end_rates] + [-q for q in active_jumps]
    theta = float(min(char_g + base))
    theta_k = [float(min([k * g for g in char_g] + base)) if char_g else float(min(base))
               for k in range(K + 1)]
    return SpectralReport(end_rates, ladders, jumps, theta, theta_k)


def generic_pair_report(nl: Nonlinearity, interval=None):
    ok, pair = check_generic_pair(nl, interval)
    return {"ok": ok, "pair": list(pair) if pair else None}
