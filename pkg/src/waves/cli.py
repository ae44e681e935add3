"""Command line entry point: build, classify, diagnose and evolve waves."""
from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import experiments as ex
from . import fixtures
from .classify import classify, spectral_report
from .errors import ConfigError, WavesError
from .nonlinearity import catalog, from_expressions
from .profile import (PRECISE, WaveProfile, build_chain, build_composite, build_constant, build_front,
                      build_riemann, build_smooth)
from .sim import Perturbation, Policy, Sampling, init_field, reconstruct
from .smooth import bump, bump_deriv

log = logging.getLogger("waves")

_NUM = {"type": "number"}
_STR = {"type": "string"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "nonlinearity": {
            "type": "object", "additionalProperties": False,
            "properties": {"catalog": _STR, "f": _STR, "g": _STR, "order": {"type": "integer"},
                           "domain": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
        },
        "wave": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["constant", "riemann", "front", "composite", "smooth", "chain",
                                  "fixture", "file"]},
                "states": {"type": "array", "items": _NUM},
                "positions": {"type": "array", "items": _NUM},
                "sigma": _NUM, "u0": _NUM, "composite": _STR, "fixture": _STR, "path": _STR,
                "strict": {"type": "boolean"},
            },
        },
        "perturbation": {
            "type": "object", "additionalProperties": False,
            "properties": {"kind": {"enum": ["none", "bump", "random"]}, "amplitude": _NUM,
                           "center": _NUM, "width": _NUM, "count": {"type": "integer", "minimum": 1}},
        },
        "simulation": {
            "type": "object", "additionalProperties": False,
            "properties": {"T": _NUM, "dt": _NUM, "h": _NUM, "span": _NUM,
                           "breaking": {"enum": ["halt", "mark"]},
                           "grid": {"type": "object", "additionalProperties": False,
                                    "properties": {"start": _NUM, "stop": _NUM,
                                                   "n": {"type": "integer", "minimum": 2}}}},
        },
        "experiment": {
            "type": "object", "additionalProperties": False,
            "properties": {"name": _STR, "params": {"type": "object"}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"dir": _STR, "format": {"enum": ["json", "csv"]}},
        },
    },
}


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config: {err}", path=str(path)) from None
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {err.message}") from None


# ---------------------------------------------------------------- building blocks

def make_nonlinearity(spec: dict):
    domain = spec.get("domain")
    if "f" in spec or "g" in spec:
        if not ("f" in spec and "g" in spec and domain):
            raise ConfigError("expression nonlinearity needs f, g and domain")
        return from_expressions(spec["f"], spec["g"], domain, spec.get("order", 8))
    return catalog(spec.get("catalog", "figure"), domain)


def make_wave(nl, spec: dict):
    kind = spec.get("kind", "front")
    st = spec.get("states", [])
    strict = spec.get("strict", True)
    sigma = spec.get("sigma", 0.0)
    if kind == "constant":
        return build_constant(nl, *(st or [0.0]), sigma)
    if kind == "riemann":
        return build_riemann(nl, *st, strict=strict)
    if kind == "front":
        return build_front(nl, *(st or [-1.0, 0.0, 1.0]), strict=strict, opts=PRECISE)
    if kind == "composite":
        return build_composite(nl, spec.get("composite", "double"), *st, strict=strict, opts=PRECISE)
    if kind == "smooth":
        return build_smooth(nl, sigma, spec.get("u0", 0.5), opts=PRECISE)
    if kind == "chain":
        return build_chain(nl, st, spec.get("positions", [0.0] * len(st)), strict=strict,
                           opts=PRECISE)
    if kind == "file":
        return WaveProfile.from_json(Path(spec["path"]).read_text())
    raise ConfigError(f"wave kind {kind!r} needs a nonlinearity-free builder; use 'fixture'")


def make_pair(cfg: dict):
    wave = cfg.get("wave", {})
    if wave.get("kind") == "fixture":
        return fixtures.fixture(wave.get("fixture", "figure-front"))
    nl = make_nonlinearity(cfg.get("nonlinearity", {}))
    return nl, make_wave(nl, wave)


def make_perturbation(spec: dict, seed) -> Perturbation:
    kind = spec.get("kind", "none")
    amp = spec.get("amplitude", 1e-2)
    c = spec.get("center", 0.0)
    w = spec.get("width", 1.0)
    if kind == "none":
        return Perturbation()
    if kind == "bump":
        return ex.bump_perturbation(amp, c, w)
    rng = np.random.default_rng(seed)
    n = spec.get("count", 3)
    amps = rng.uniform(-amp, amp, n)
    centers = rng.uniform(c - w, c + w, n)
    widths = rng.uniform(0.25 * w, w, n)
    log.info("random perturbation: %s", list(zip(amps, centers, widths)))

    def func(x):
        return sum(a * bump((x - cc) / ww) for a, cc, ww in zip(amps, centers, widths))

    def deriv(x):
        return sum(a * bump_deriv((x - cc) / ww) / ww for a, cc, ww in zip(amps, centers, widths))

    return Perturbation(func, deriv, support=(c - 2 * w, c + 2 * w))


# ---------------------------------------------------------------- experiments with fixture defaults

def _bump_for(params, center, amplitude, width):
    return ex.bump_perturbation(params.pop("amplitude", amplitude), params.pop("center", center),
                                params.pop("width", width))


def _exp_infinity(pair, params):
    nl, pr = pair or fixtures.infinity_wave()
    return ex.run_experiment_infinity, (nl, pr), {"eps": 0.1}


def _exp_charpoint(pair, params):
    nl, pr = pair or fixtures.breaking_front()
    return ex.run_experiment_charpoint, (nl, pr), {"eps": ex.charpoint_eps(params.pop("ratio", 0.1))}


def _exp_shock(pair, params):
    nl, pr = pair or fixtures.unstable_shock()
    k, _ = ex._unstable_jump(pr, nl)
    eta = params.get("eta") or ex.proof_eta(nl, pr, k)
    return ex.run_experiment_shock, (nl, pr), {"eps": params.pop("eps_fraction", 0.01) * eta}


def _exp_front_decay(pair, params):
    nl, pr = pair or fixtures.figure_front()
    return ex.run_experiment_front_decay, (nl, pr, _bump_for(params, 0.3, 1e-2, 2.0)), {}


def _exp_small_shock(pair, params):
    nl, pr = pair or fixtures.burgers_front()
    delta0 = params.pop("delta0", -2.0)
    pert = ex.small_shock_perturbation(pr, nl, delta0, params.pop("amplitude", 1e-3),
                                       params.pop("width", 0.5))
    return ex.run_experiment_small_shock, (nl, pr, pert, delta0), {}


def _exp_composite(pair, params):
    nl, pr = pair or fixtures.family_wave()
    x_last = pr.characteristic_points[-1][0]
    return ex.run_experiment_composite, (nl, pr, _bump_for(params, x_last, 5e-3, 0.2)), {}


def _exp_weyl(pair, params):
    nl, pr = pair or fixtures.figure_front()
    return ex.run_experiment_weyl, (nl, pr), {}


EXPERIMENTS = {
    "infinity": _exp_infinity,
    "charpoint": _exp_charpoint,
    "shock": _exp_shock,
    "front-decay": _exp_front_decay,
    "small-shock": _exp_small_shock,
    "composite": _exp_composite,
    "weyl": _exp_weyl,
}


def run_named_experiment(name, pair=None, params=None):
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
    params = dict(params or {})
    fn, args, kwargs = EXPERIMENTS[name](pair, params)
    accepted = inspect.signature(fn).parameters
    unknown = [k for k in params if k not in accepted]
    if unknown:
        raise ConfigError(f"unknown parameters for {name}: {unknown}")
    kwargs.update(params)
    return fn(*args, **kwargs)


# ---------------------------------------------------------------- figures

def profile_table(profile: WaveProfile, lo=-6.0, hi=6.0, n=601) -> str:
    """(x, u, piece) rows; each jump appears twice, once per trace."""
    xs = np.linspace(lo, hi, n)
    rows = [(float(x), float(profile.eval(x)), int(profile.piece_index(x))) for x in xs]
    for k, j in enumerate(profile.discontinuities):
        if lo < j.d < hi:
            rows += [(j.d, j.u_left, k), (j.d, j.u_right, k + 1)]
    rows.sort(key=lambda r: (r[0], r[2]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "u", "piece"])
    for x, u, p in rows:
        w.writerow([repr(x), repr(u), p])
    return buf.getvalue()


def figure_tables() -> dict:
    out = {}
    _, classes = fixtures.figure_classes()
    for name, pr in classes.items():
        out[f"class_{name}.csv"] = profile_table(pr)
    _, comps = fixtures.figure_composites()
    for name, pr in comps.items():
        out[f"composite_{name}.csv"] = profile_table(pr)
    return out


# ---------------------------------------------------------------- output

def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    return str(o)


def _clean(o):
    # JSON has no infinities; spell them out
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


class Output:
    def __init__(self, out_dir, fmt):
        self.dir = Path(out_dir) if out_dir else None
        self.format = fmt
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def file(self, name, text):
        if self.dir is None:
            sys.stdout.write(text)
        else:
            (self.dir / name).write_text(text)
            log.info("wrote %s", self.dir / name)

    def json(self, name, obj):
        text = json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), indent=2) + "\n"
        if self.dir is None:
            sys.stdout.write(text)
        else:
            self.file(name, text)


# ---------------------------------------------------------------- commands

def _merged_config(args) -> dict:
    cfg = load_config(args.config)
    nl_spec = dict(cfg.get("nonlinearity", {}))
    domain = getattr(args, "domain", None)
    if getattr(args, "catalog", None):
        nl_spec = {"catalog": args.catalog}
        if domain:
            nl_spec["domain"] = domain
    elif domain and nl_spec:
        nl_spec["domain"] = domain
    if getattr(args, "f", None) or getattr(args, "g", None):
        nl_spec = {"f": args.f, "g": args.g, "domain": domain or [-1.2, 1.2]}
    if nl_spec:
        cfg["nonlinearity"] = nl_spec
    wave = dict(cfg.get("wave", {}))
    for key in ("kind", "composite", "fixture", "sigma"):
        val = getattr(args, key, None)
        if val is not None:
            wave[key] = val
    if getattr(args, "states", None):
        wave["states"] = args.states
    if getattr(args, "fixture", None):
        wave = {"kind": "fixture", "fixture": args.fixture}
    if getattr(args, "profile", None):
        wave = {"kind": "file", "path": args.profile}
    if wave:
        cfg["wave"] = wave
    if args.seed is not None:
        cfg["seed"] = args.seed
    validate_config(cfg)
    return cfg


def cmd_profile(args, out):
    nl, pr = make_pair(_merged_config(args))
    failures = {k: v for k, v in pr.check(nl).items() if v}
    if failures:
        log.warning("profile invariants: %s", failures)
    if out.format == "csv":
        out.file("profile.csv", profile_table(pr))
    else:
        out.file("profile.json", pr.to_json(indent=2) + "\n")
    return 0


def cmd_classify(args, out):
    nl, pr = make_pair(_merged_config(args))
    out.json("classification.json", classify(pr, nl).to_dict())
    return 0


def cmd_spectrum(args, out):
    nl, pr = make_pair(_merged_config(args))
    out.json("spectrum.json", spectral_report(pr, nl).to_dict())
    return 0


def cmd_simulate(args, out):
    cfg = _merged_config(args)
    nl, pr = make_pair(cfg)
    sim = cfg.get("simulation", {})
    pert = make_perturbation(cfg.get("perturbation", {}), cfg.get("seed", 0))
    fld = init_field(pr, nl, pert, Sampling(span=sim.get("span", 10.0), h=sim.get("h", 0.02)),
                     Policy(breaking=sim.get("breaking", "halt")))
    fld.advance(sim.get("T", 1.0), sim.get("dt", 1e-2))
    g = sim.get("grid", {})
    grid = np.linspace(g.get("start", -10.0), g.get("stop", 10.0), g.get("n", 2001))
    snap = reconstruct(fld, grid)
    if out.format == "csv":
        out.file("snapshot.csv", snap.to_csv())
    else:
        out.json("simulation.json", {"summary": fld.summary(),
                                     "shocks": [c.check() for c in fld.shock_curves()]})
        if out.dir is not None:
            out.file("snapshot.csv", snap.to_csv())
    return 0


def cmd_experiment(args, out):
    cfg = _merged_config(args)
    exp = cfg.get("experiment", {})
    params = dict(exp.get("params", {}))
    for item in args.param or []:
        key, _, val = item.partition("=")
        params[key] = json.loads(val)
    pair = make_pair(cfg) if ("nonlinearity" in cfg or "wave" in cfg) else None
    res = run_named_experiment(args.name, pair, params)
    if out.format == "csv":
        out.file(f"{args.name}.csv", res.series_csv())
    else:
        out.json(f"{args.name}.json", res.summary())
        if out.dir is not None:
            out.file(f"{args.name}.csv", res.series_csv())
    return 0 if res.passed else 3


def cmd_figures(args, out):
    if out.dir is None:
        out = Output("figures", out.format)
    for name, text in figure_tables().items():
        out.file(name, text)
    return 0


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--seed", type=int, help="64-bit seed for random perturbations")
    p.add_argument("--format", choices=["json", "csv"], help="output format (default json)")
    return p


def _wave_args(p):
    p.add_argument("--catalog", help="catalog nonlinearity (figure, figure-breaking, burgers-cubic-source)")
    p.add_argument("--f", help="flux expression in u")
    p.add_argument("--g", help="source expression in u")
    p.add_argument("--domain", type=float, nargs=2, help="state interval (expressions default to -1.2 1.2)")
    p.add_argument("--kind", choices=["constant", "riemann", "front", "composite", "smooth", "chain",
                                      "fixture"])
    p.add_argument("--states", type=float, nargs="+")
    p.add_argument("--sigma", type=float)
    p.add_argument("--composite", choices=["single-left", "single-right", "double"])
    p.add_argument("--fixture", choices=sorted(fixtures.FIXTURES))
    p.add_argument("--profile", help="serialized profile JSON")


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="waves", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (("profile", cmd_profile, "build and serialize a wave"),
                            ("classify", cmd_classify, "stability verdict as JSON"),
                            ("spectrum", cmd_spectrum, "spectral report as JSON"),
                            ("simulate", cmd_simulate, "evolve a perturbed wave")):
        p = sub.add_parser(name, parents=[common], help=help_)
        _wave_args(p)
        p.set_defaults(func=fn)
    p = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--param", action="append", metavar="KEY=JSON", help="experiment parameter")
    _wave_args(p)
    p.set_defaults(func=cmd_experiment)
    p = sub.add_parser("figures", parents=[common], help="CSV tables of the stable shapes")
    p.set_defaults(func=cmd_figures)
    return parser


def _setup_logging():
    level = os.environ.get("WAVES_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        # flags win over the config's output block
        dest = load_config(args.config).get("output", {})
        fmt = args.format or dest.get("format", "json")
        out = Output(args.out or dest.get("dir"), fmt)
        return args.func(args, out)
    except WavesError as err:
        sys.stderr.write(json.dumps(_clean(err.to_dict()), default=_default) + "\n")
        return 1
    except (OSError, ValueError, TypeError) as err:
        sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")
        return 1


def entry():
    sys.exit(main())
