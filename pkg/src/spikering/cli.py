"""Command line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Errors are
reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .balance import balance_sweep, solve_balance
from .continuum import compare_discrete, parse_forcing
from .energy import scan_F
from .errors import NumericalError, SpikeRingError, ValidationError
from .groundstate import GroundStateProfile, derive_constants, solve_ground_state
from .io import write_json, write_rows
from .potential import PotentialModel
from .reduced_linear import build_T, spectrum

log = logging.getLogger("spikering")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

# per-command defaults; a --config file may set any of these keys and nothing else
PROFILE_KEYS = {"N": 2, "p": 3.0, "r_max": 40.0, "tol": 1e-12, "a": 1.0, "cache_dir": None}
DEFAULTS = {
    "ground-state": dict(PROFILE_KEYS),
    "balance-sweep": {**PROFILE_KEYS, "K": [100, 200, 400, 800, 1600, 3200, 6400], "m": 4.0, "psi_mode": None},
    "spectrum": {**PROFILE_KEYS, "K": 64, "m": 4.0, "dhat": None, "psi_mode": None},
    "compare-continuum": {**PROFILE_KEYS, "K": [32, 64, 128, 256], "m": 4.0, "dhat": None,
                          "phi": "cos 1", "varphi": "0", "dhat_K": 64},
    "energy-scan": {**PROFILE_KEYS, "K": 16, "m": 4.0, "n_alpha": 64, "potential": None,
                    "psi_mode": None, "fp_tol": 1e-10, "seed": 0},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _add_profile_args(p):
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--cache-dir", dest="cache_dir")


def build_parser():
    parser = _Parser(prog="spikering", description="Spike-ring reduction toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with command parameters")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ground-state", parents=[common], help="solve for the ground state and constants")
    _add_profile_args(p)

    p = sub.add_parser("balance-sweep", parents=[common], help="solve the balancing condition over K")
    _add_profile_args(p)
    p.add_argument("--K", type=int, nargs="+")
    p.add_argument("--m", type=float)
    p.add_argument("--psi-mode", dest="psi_mode", choices=("quadrature", "asymptotic"))

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues and inertia of T")
    _add_profile_args(p)
    p.add_argument("--K", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--dhat", type=float, help="override d̂ (default: from balancing)")
    p.add_argument("--psi-mode", dest="psi_mode", choices=("quadrature", "asymptotic"))

    p = sub.add_parser("compare-continuum", parents=[common], help="discrete vs continuum convergence table")
    _add_profile_args(p)
    p.add_argument("--K", type=int, nargs="+")
    p.add_argument("--m", type=float)
    p.add_argument("--dhat", type=float)
    p.add_argument("--dhat-K", dest="dhat_K", type=int, help="K whose balanced d̂ is used (default 64)")
    p.add_argument("--phi", help='forcing such as "cos 3 + 0.5 sin 1"')
    p.add_argument("--varphi", help="mean-zero forcing, same syntax")

    p = sub.add_parser("energy-scan", parents=[common], help="F(α) scan and its critical points")
    _add_profile_args(p)
    p.add_argument("--potential", help="potential model JSON file")
    p.add_argument("--K", type=int)
    p.add_argument("--m", type=float)
    p.add_argument("--n-alpha", dest="n_alpha", type=int)
    p.add_argument("--psi-mode", dest="psi_mode", choices=("quadrature", "asymptotic"))
    p.add_argument("--fp-tol", dest="fp_tol", type=float)
    p.add_argument("--seed", type=int)
    return parser


def resolve_params(command, args):
    """Defaults, overridden by the --config file, overridden by explicit flags."""
    params = dict(DEFAULTS[command])
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
        unknown = set(cfg) - set(params)
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
        params.update(cfg)
    for key in params:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


# ------------------------------------------------------------------ profiles

def profile_key(params):
    blob = json.dumps({k: params[k] for k in ("N", "p", "r_max", "tol")}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_or_solve_profile(params, out):
    """Load the cached profile for (N, p, r_max, tol) or solve and cache it."""
    cache = Path(params["cache_dir"]) if params.get("cache_dir") else Path(out) / "cache"
    path = cache / f"profile-{profile_key(params)}.csv"
    if path.exists() and path.with_suffix(".json").exists():
        prof, consts = GroundStateProfile.load(path)
        log.info("loaded cached profile %s", path)
        if consts is not None and consts.a == float(params["a"]):
            return prof, consts, path, True
        consts = derive_constants(prof, float(params["a"]))
        return prof, consts, path, True
    prof = solve_ground_state(int(params["N"]), float(params["p"]), float(params["r_max"]), float(params["tol"]))
    consts = derive_constants(prof, float(params["a"]))
    cache.mkdir(parents=True, exist_ok=True)
    prof.save(path, consts)
    return prof, consts, path, False


# ------------------------------------------------------------------ commands

def cmd_ground_state(params, args):
    prof, consts, path, cached = load_or_solve_profile(params, args.out)
    out = Path(args.out)
    prof.save(out / "profile.csv", consts)
    summary = {"w0": prof.w0, "c_Np": prof.c_np, "cached": cached,
               "constants": {k: v for k, v in consts.to_dict().items() if k != "checks"},
               "profile": str(out / "profile.csv")}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_balance_sweep(params, args):
    prof, consts, _, _ = load_or_solve_profile(params, args.out)
    rows = balance_sweep(params["K"], float(params["m"]), consts, prof, params["psi_mode"])
    cols = ["K", "d", "R", "dhat", "residual", "asymptotic_d"]
    path = write_rows(Path(args.out) / f"balance.{args.format}", rows, args.format, cols)
    print(json.dumps({"rows": len(rows), "output": str(path),
                      "max_rel_residual": max(abs(r["residual"]) for r in rows)}))
    return EXIT_OK


def _dhat_for(params, prof, consts, K):
    if params.get("dhat") is not None:
        return float(params["dhat"])
    return solve_balance(K, float(params["m"]), consts, prof, params.get("psi_mode")).dhat


def cmd_spectrum(params, args):
    K, m = int(params["K"]), float(params["m"])
    if params.get("dhat") is None:
        prof, consts, _, _ = load_or_solve_profile(params, args.out)
        dhat = _dhat_for(params, prof, consts, K)
    else:
        dhat = float(params["dhat"])
    sp = spectrum(build_T(K, dhat, m, min_K=2))
    path = write_rows(Path(args.out) / f"spectrum.{args.format}", sp.rows(), args.format,
                      ["l", "lambda1", "lambda2sq", "Lambda1", "Lambda2"])
    n0, nn, npos = sp.inertia
    print(f"inertia: {n0} zero, {nn} negative, {npos} positive")
    print(json.dumps({"K": K, "dhat": dhat, "inertia": [n0, nn, npos], "output": str(path)}))
    if (n0, nn, npos) != (1, K - 1, K):
        print(json.dumps({"error": "InertiaMismatch", "message": f"expected (1, {K - 1}, {K})",
                          "exit_code": EXIT_NUMERICAL}), file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_compare_continuum(params, args):
    phi = parse_forcing(params["phi"])
    varphi = parse_forcing(params["varphi"])
    m = float(params["m"])
    if params.get("dhat") is None:
        prof, consts, _, _ = load_or_solve_profile(params, args.out)
        dhat = _dhat_for(params, prof, consts, int(params["dhat_K"]))
    else:
        dhat = float(params["dhat"])
    rows, prev = [], None
    for K in sorted(int(k) for k in params["K"]):
        ef, eg = compare_discrete(K, phi, varphi, m, dhat)
        err = max(ef, eg)
        ratio = err / prev if prev not in (None, 0.0) else float("nan")
        rows.append({"K": K, "sup_err_f": ef, "sup_err_g": eg, "ratio": ratio})
        prev = err
    path = write_rows(Path(args.out) / f"convergence.{args.format}", rows, args.format)
    print(json.dumps({"dhat": dhat, "rows": len(rows), "output": str(path),
                      "last_ratio": rows[-1]["ratio"] if rows else None}))
    return EXIT_OK


def cmd_energy_scan(params, args):
    K, m = int(params["K"]), float(params["m"])
    prof, consts, _, _ = load_or_solve_profile(params, args.out)
    pot_spec = params.get("potential")
    if pot_spec is None:
        pot = PotentialModel.radial(a=consts.a, m=m)
    elif isinstance(pot_spec, dict):
        pot = PotentialModel.from_dict(pot_spec)
    else:
        try:
            pot = PotentialModel.from_dict(json.loads(Path(pot_spec).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read potential {pot_spec}: {exc}") from exc
    bal = solve_balance(K, m, consts, prof, params.get("psi_mode"))
    res = scan_F(K, m, pot, bal, consts, prof, int(params["n_alpha"]), tol=float(params["fp_tol"]),
                 workers=max(1, int(args.threads)))
    out = Path(args.out)
    scan_path = write_rows(out / f"scan.{args.format}", res.rows(), args.format,
                           ["alpha", "F", "gamma", "iterations", "q_norm_star"])
    maxima = [e for e in res.extrema if e["kind"] == "max"]
    minima = [e for e in res.extrema if e["kind"] == "min"]
    summary = {
        "K": K, "m": m, "seed": int(params["seed"]), "potential": pot.to_dict(), "flat": res.flat,
        "n_alpha": int(params["n_alpha"]), "failed": int((~res.converged).sum()),
        "argmax": max(maxima, key=lambda e: e["F_excess"])["alpha"] if maxima else None,
        "argmin": min(minima, key=lambda e: e["F_excess"])["alpha"] if minima else None,
        "extrema": [{**e, "F": e["F_excess"] + K * consts.I0} for e in res.extrema],
        "gamma_sign_changes": res.gamma_sign_changes(),
    }
    write_json(out / "extrema.json", summary)
    print(json.dumps({"flat": res.flat, "extrema": len(res.extrema), "output": str(scan_path)}))
    return EXIT_OK


COMMANDS = {
    "ground-state": cmd_ground_state,
    "balance-sweep": cmd_balance_sweep,
    "spectrum": cmd_spectrum,
    "compare-continuum": cmd_compare_continuum,
    "energy-scan": cmd_energy_scan,
}


def _fail(exc, code):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        params = resolve_params(args.command, args)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](params, args)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except (SpikeRingError, ValueError, TypeError, KeyError) as exc:
        return _fail(exc, EXIT_VALIDATION)


if __name__ == "__main__":
    sys.exit(main())
