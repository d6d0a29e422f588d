"""Command-line front end.

Each subcommand writes its reports into the output directory (``--out``,
default ``$MORSEFORGE_OUT/<command>`` or ``runs/<command>``) and prints a JSON
summary.  Exit codes: 0 success, 2 domain error (error JSON on stdout),
1 internal fault.  ``--config FILE`` reads ``key = value`` lines; explicit
flags override it and unknown keys are rejected.
"""

import argparse
import csv
import json
import math
import os
import sys
import traceback

import numpy as np

from .errors import ConfigError, DomainError, NotConverged

COMMANDS = ("shoot-alencar", "shoot-hsiang", "quantities", "spectrum", "football-modes",
            "indicial", "fredholm", "desingularize", "picard", "all-acceptance")


# ---------------------------------------------------------------------------
# configuration

def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


# flag name -> (type, default, help)
_PARAMS = {
    "shoot-alencar": {"h": (float, 1e-3, "output step"), "s_max": (float, 40.0, "arclength"),
                      "m": (int, 2, "factor dimension")},
    "shoot-hsiang": {"i": (int, 0, "branch index"), "tol": (float, 1e-8, "symmetry tolerance"),
                     "h": (float, 1e-4, "output step")},
    "quantities": {"curve": (str, None, "curve CSV"), "i": (int, None, "shoot E_i instead"),
                   "h": (float, 1e-4, "step when shooting"), "eps": (float, 0.0, "rho cutoff")},
    "spectrum": {"curve": (str, None, "curve CSV"), "i": (int, None, "shoot E_i instead"),
                 "h": (float, 1e-4, "step when shooting"), "pmax": (int, None, "mode cutoff"),
                 "null_tol": (float, 1e-3, "near-null window")},
    "football-modes": {"eps": (_floats, [1e-2, 1e-3, 1e-4], "cutoffs"), "p": (int, 0, "mode p"),
                       "q": (int, 0, "mode q"), "c": (float, 2.0, "indicial constant"),
                       "n": (int, 4000, "nodes per half")},
    "indicial": {"beta": (float, 1.5, "weight"), "c": (float, None, "indicial constant"),
                 "b": (float, None, "shift, c = -2 b^2")},
    "fredholm": {"beta": (float, 1.5, "weight"), "c": (float, None, "indicial constant"),
                 "b": (float, None, "shift, c = -2 b^2")},
    "desingularize": {"eta1": (float, 1e-3, "cap scale"), "eta2": (float, 0.2, "gluing radius"),
                      "h": (float, 1e-5, "output step"), "b": (float, None, "shift (2 b~* if unset)")},
    "picard": {"eta1": (float, 1e-3, "cap scale"), "eta2": (float, 0.2, "gluing radius"),
               "h": (float, 1e-5, "output step"), "b": (float, None, "shift (2 b~* if unset)"),
               "tol": (float, 1e-6, "residual target"), "max_iter": (int, 10, "iterations"),
               "r0": (float, None, "bound on the initial defect")},
    "all-acceptance": {"tol": (float, 1.0, "multiplier of the pinned tolerances"),
                       "only": (str, None, "comma-separated criterion numbers")},
}
_COMMON = {"out": (str, None, "output directory"), "format": (str, "json", "csv or json")}


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'", line=n)
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _validate(cmd, cfg):
    p = cfg
    checks = [
        ("h", lambda v: 1e-6 < v <= 1e-2, "h must lie in (1e-6, 1e-2]"),
        ("i", lambda v: v is None or 0 <= v <= 10, "i must lie in 0..10"),
        ("eta1", lambda v: 0 < v, "eta1 must be positive"),
        ("eta2", lambda v: 0 < v <= 0.3, "eta2 must lie in (0, 0.3]"),
        ("tol", lambda v: v >= 0, "tol must be nonnegative"),
        ("max_iter", lambda v: v >= 1, "max_iter must be positive"),
        ("null_tol", lambda v: v >= 0, "null_tol must be nonnegative"),
        ("pmax", lambda v: v is None or 0 <= v <= 50, "pmax must lie in 0..50"),
        ("format", lambda v: v in ("csv", "json"), "format must be csv or json"),
    ]
    for key, ok, msg in checks:
        if key in p and p[key] is not None and not ok(p[key]):
            raise ConfigError(msg, key=key, value=p[key])
    if cmd in ("desingularize", "picard") and not p["eta1"] < p["eta2"]:
        raise ConfigError("need eta1 < eta2", eta1=p["eta1"], eta2=p["eta2"])


def build_parser():
    parser = argparse.ArgumentParser(prog="morseforge", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="key = value file")
        for name, (_, _, hlp) in {**_PARAMS[cmd], **_COMMON}.items():
            sp.add_argument("--" + name.replace("_", "-"), dest=name, default=None, help=hlp)
    return parser


def resolve(cmd, ns):
    """Merge defaults, config file and flags into a typed parameter dict."""
    params = {**_PARAMS[cmd], **_COMMON}
    raw = {}
    if ns.config:
        raw.update(read_config(ns.config))
        unknown = sorted(set(raw) - set(params))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", keys=unknown)
    for name in params:
        v = getattr(ns, name, None)
        if v is not None:
            raw[name] = v
    cfg = {}
    for name, (typ, default, _) in params.items():
        if name in raw and raw[name] not in (None, ""):
            try:
                cfg[name] = typ(raw[name])
            except ValueError:
                raise ConfigError(f"bad value for {name}: {raw[name]!r}", key=name) from None
        else:
            cfg[name] = default
    if cfg["out"] is None:
        cfg["out"] = os.path.join(os.environ.get("MORSEFORGE_OUT", "runs"), cmd)
    _validate(cmd, cfg)
    return cfg


# ---------------------------------------------------------------------------
# output helpers

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        for r in rows:
            wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _curve_from(cfg):
    from .shooting import ProfileCurve, shoot_hsiang
    if cfg.get("curve"):
        return ProfileCurve.from_csv(cfg["curve"])
    if cfg.get("i") is None:
        raise ConfigError("give --curve or --i")
    return shoot_hsiang(cfg["i"], h=cfg["h"]).curve


def _c_value(cfg):
    if cfg["c"] is not None and cfg["b"] is not None:
        raise ConfigError("give only one of --c and --b")
    if cfg["b"] is not None:
        return -2.0 * cfg["b"] ** 2
    return 2.0 if cfg["c"] is None else cfg["c"]


# ---------------------------------------------------------------------------
# commands

def cmd_shoot_alencar(cfg, out):
    from .shooting import shoot_alencar
    curve = shoot_alencar(h=cfg["h"], s_max=cfg["s_max"], m=cfg["m"])
    curve.to_csv(os.path.join(out, "curve.csv"))
    info = {"kind": str(curve.kind), "h": curve.h, "samples": len(curve),
            "coneCrossings": curve.meta["cone_crossings"], "stop": curve.meta["stop"]}
    write_json(os.path.join(out, "profile.json"), info)
    return info


def cmd_shoot_hsiang(cfg, out):
    from .quantities import mean_curvature_residual
    from .shooting import shoot_hsiang
    hp = shoot_hsiang(cfg["i"], tol=cfg["tol"], h=cfg["h"])
    hp.curve.to_csv(os.path.join(out, "curve.csv"))
    info = {"i": hp.i, "crossings": hp.curve.meta["crossings"], "r0": hp.r0,
            "symmetryDefect": hp.symmetry_defect, "h": hp.curve.h, "samples": len(hp.curve),
            "residual": mean_curvature_residual(hp.curve), "start": hp.curve.meta["start"],
            "end": hp.curve.meta["end"]}
    write_json(os.path.join(out, "profile.json"), info)
    return info


def cmd_quantities(cfg, out):
    from .quantities import quantity_report
    rep = quantity_report(_curve_from(cfg), cfg["eps"]).to_dict()
    if cfg["format"] == "csv":
        write_csv(os.path.join(out, "quantities.csv"), [list(rep)[:5], list(rep.values())[:5]])
    write_json(os.path.join(out, "quantities.json"), rep)
    return rep


def cmd_spectrum(cfg, out):
    from .spectrum import morse_index
    rep = morse_index(_curve_from(cfg), null_tol=cfg["null_tol"], pmax=cfg["pmax"])
    write_csv(os.path.join(out, "spectrum.csv"), rep.csv_rows())
    d = rep.to_dict()
    write_json(os.path.join(out, "spectrum.json"), d)
    return d


def cmd_football_modes(cfg, out):
    from .spectrum import football_truncated_count
    rows = [[e, football_truncated_count(e, cfg["p"], cfg["q"], cfg["c"], cfg["n"])]
            for e in cfg["eps"]]
    write_csv(os.path.join(out, "football_modes.csv"), [["eps", "neg"]] + rows)
    info = {"p": cfg["p"], "q": cfg["q"], "c": cfg["c"],
            "counts": [{"eps": e, "neg": n} for e, n in rows]}
    write_json(os.path.join(out, "football_modes.json"), info)
    return info


def cmd_indicial(cfg, out):
    from .conifold import indicial_report
    d = indicial_report(cfg["beta"], _c_value(cfg)).to_dict()
    if cfg["format"] == "csv":
        rows = [["p", "q", "re1", "im1", "re2", "im2", "mult"]]
        rows += [[e[k] for k in rows[0]] for e in d["entries"]]
        write_csv(os.path.join(out, "indicial.csv"), rows)
    write_json(os.path.join(out, "indicial.json"), d)
    return d


def cmd_fredholm(cfg, out):
    from .conifold import indicial_report
    rep = indicial_report(cfg["beta"], _c_value(cfg))
    d = {"beta": rep.beta, "c": rep.c, "crossingSum": rep.crossing_sum,
         "fredholmIndex": rep.fredholm_index, "isomorphism": rep.isomorphism}
    write_json(os.path.join(out, "fredholm.json"), d)
    return d


def _desing_setup(cfg):
    from . import desing as D
    cap = D.alencar_cap(reach=1.1 * cfg["eta2"] / cfg["eta1"])
    prof = D.interpolate_profile(cap, cfg["eta1"], cfg["eta2"], h=cfg["h"])
    bt, b, B = D.coercivity_parameters(prof)
    if cfg["b"] is not None:
        b = cfg["b"]
        B = -2.0 * (1.0 + b * b)
    return prof, bt, b, B


def cmd_desingularize(cfg, out):
    from . import desing as D
    prof, bt, b, B = _desing_setup(cfg)
    prof.curve.to_csv(os.path.join(out, "curve.csv"))
    H = np.abs(prof.H0)
    reg = prof.region
    D.linearized_operator(prof, B)
    info = {"eta1": prof.eta1, "eta2": prof.eta2, "h": prof.h, "samples": len(prof),
            "bTildeStar": bt, "b": b, "B": B, "coercive": True,
            "residual": {name: float(H[reg == k].max()) if np.any(reg == k) else 0.0
                         for k, name in enumerate(("cap", "annulus", "body"))}}
    write_json(os.path.join(out, "profile.json"), info)
    return info


def cmd_picard(cfg, out):
    from . import desing as D
    from .shooting import ProfileCurve
    from .orbit import SPHERICAL
    prof, bt, b, B = _desing_setup(cfg)
    states = D.picard_solve(prof, B, tol=cfg["tol"], max_iter=cfg["max_iter"], r0=cfg["r0"])
    write_csv(os.path.join(out, "picard_log.csv"),
              [["iter", "norm1", "norm2", "residual", "contraction"]] + [s.row() for s in states])
    u = states[-1].u
    P = D.graph_positions(prof, u)
    dP = prof.deriv(P, 1)
    T = dP / np.linalg.norm(dP, axis=1)[:, None]
    # parametrized by the arclength of the base profile
    final = ProfileCurve.from_ambient(SPHERICAL, P, T, prof.curve.s[0], prof.h,
                                      {"parameter": "base arclength"})
    final.to_csv(os.path.join(out, "curve.csv"))
    check = float(np.max(np.abs(D.recompute_conformal_mean_curvature(prof, P, B))))
    info = {"eta1": prof.eta1, "eta2": prof.eta2, "b": b, "B": B, "bTildeStar": bt,
            "iterations": len(states) - 1, "residual": states[-1].residual,
            "converged": states[-1].residual < cfg["tol"], "independentCheck": check,
            "contraction": [s.contraction for s in states[2:]]}
    write_json(os.path.join(out, "picard.json"), info)
    if not info["converged"]:
        raise NotConverged("no convergence within max_iter", residual=states[-1].residual)
    return info


def cmd_all_acceptance(cfg, out):
    from .acceptance import run_all, summarize
    which = None if cfg["only"] is None else [int(x) for x in cfg["only"].split(",")]
    rows = run_all(cfg["tol"], which)
    write_csv(os.path.join(out, "acceptance.csv"),
              [["criterion", "expected", "observed", "tolerance", "pass"]] + [r.csv() for r in rows])
    summ = summarize(rows)
    return {"passed": all(summ.values()),
            "criteria": {str(k): ("pass" if v else "fail") for k, v in summ.items()}}


HANDLERS = {c: globals()["cmd_" + c.replace("-", "_")] for c in COMMANDS}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve(ns.command, ns)
        os.makedirs(cfg["out"], exist_ok=True)
        info = HANDLERS[ns.command](cfg, cfg["out"])
    except (DomainError, ValueError) as err:
        payload = err.to_dict() if isinstance(err, DomainError) else {
            "error": "ValueError", "message": str(err)}
        print(json.dumps(_clean(payload), sort_keys=True))
        return 2
    except Exception:
        traceback.print_exc()
        return 1
    print(json.dumps(_clean(info), sort_keys=True))
    if ns.command == "all-acceptance" and not info["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
