"""Command-line entry point.

Every subcommand reads JSON (``--input``, or standard input) and writes JSON
(``--output``, or standard output).  Errors raised by the library exit with
status 1 and a JSON object on standard error; configuration problems exit
with status 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .charpoly import (CharPoly, PolygonSpec, build_char_poly, check_admissible,
                       random_admissible_spec)
from .demos import DEMOS, run_demo
from .errors import SteklovError
from .geometry import TOL_ONE, recover_geometry
from .graph_oracle import CircleGraph, graph_eigenvalues
from .pipeline import plan_sigma_max, roundtrip
from .reconstruct import DEFAULT_MARGIN, DEFAULT_THETA, RecoveryOpts, recover_charpoly_detailed
from .roots import RootOpts
from .spectra import find_quasi_eigenvalues, spectrum_from_dict

log = logging.getLogger("steklov_inverse")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as JSON on stderr, exit status 2."""

    def error(self, message):
        self.exit(2, _dumps({"error": "ConfigError", "message": f"{self.prog}: {message}"}))


def _positive(name: str):
    def parse(text: str) -> float:
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {text!r}")
        return v
    return parse


def _read_json(path: Optional[str]) -> dict:
    try:
        if path is None or path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON input {path or '<stdin>'}: {exc}")


def _write(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _spec_from(d: dict) -> PolygonSpec:
    return PolygonSpec.from_dict(d.get("spec", d))


def _opts(args) -> RecoveryOpts:
    return RecoveryOpts(window=args.window, margin=args.margin, theta=args.theta, dz=args.dz, T=args.T)


# --------------------------------------------------------------------------

def cmd_forward(args) -> dict:
    spec = _spec_from(_read_json(args.input))
    out = build_char_poly(spec).to_dict()
    if args.report:
        return {"charpoly": out, "admissibility": check_admissible(spec).to_dict()}
    return out


def cmd_spectrum(args) -> dict:
    F = CharPoly.from_dict(_read_json(args.input))
    sigma_max = args.sigma_max or plan_sigma_max(F, args.margin)
    return find_quasi_eigenvalues(F, sigma_max, RootOpts(oversample=args.oversample)).to_dict()


def cmd_reconstruct(args) -> dict:
    S = spectrum_from_dict(_read_json(args.input))
    if args.window is not None and len(S) and args.margin * args.window > float(S.values[-1]):
        raise ConfigError(f"--window {args.window} needs roots up to {args.margin * args.window:g}; "
                          f"the spectrum stops at {float(S.values[-1]):g}")
    rec = recover_charpoly_detailed(S, _opts(args))
    if args.csv:
        _write(rec.transform.to_csv(), args.csv)
    tf, to = rec.suggested_tolerances()
    out = rec.charpoly.to_dict()
    # extra key; geometry reads it to loosen its tolerances for estimated input
    out["recovery"] = {"noise": rec.noise, "L_estimate": rec.L_estimate, "tol_freq": tf,
                       "tol_one": to}
    return out


def cmd_geometry(args) -> dict:
    d = _read_json(args.input)
    F = CharPoly.from_dict(d)
    hint = d.get("recovery", {})
    tol_freq = args.tol_freq if args.tol_freq is not None else hint.get("tol_freq")
    tol_one = args.tol_one if args.tol_one is not None else hint.get("tol_one", TOL_ONE)
    return recover_geometry(F, n_expected=args.n, tol_freq=tol_freq, tol_one=tol_one,
                            strict=args.strict).to_dict()


def cmd_roundtrip(args) -> dict:
    if args.input is not None:
        spec = _spec_from(_read_json(args.input))
    else:
        rng = np.random.default_rng(args.seed)
        spec = random_admissible_spec(rng, args.n or 3)
    perturb = None if args.perturb is None else (args.perturb[0], args.perturb[1])
    rep = roundtrip(spec, args.sigma_max, perturb, args.seed, _opts(args))
    return rep.to_dict()


def cmd_oracle(args) -> dict:
    spec = _spec_from(_read_json(args.input))
    sigma_max = args.sigma_max or 30.0
    A = find_quasi_eigenvalues(build_char_poly(spec), sigma_max)
    B = graph_eigenvalues(CircleGraph.from_spec(spec), sigma_max)
    dev = float(np.max(np.abs(A.values - B.values))) if len(A) == len(B) and len(A) else (
        0.0 if len(A) == len(B) else math.inf)
    return {"sigma_max": sigma_max, "charpoly_roots": A.to_dict(), "graph_roots": B.to_dict(),
            "same_count": len(A) == len(B), "max_deviation": dev}


def cmd_demo(args) -> dict:
    return run_demo(args.name)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="steklov", description=(
        "Forward and inverse maps between curvilinear polygons, their characteristic "
        "trigonometric polynomials and quasi-eigenvalue sequences."))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io(sp):
        sp.add_argument("--input", "-i", help="JSON input file (default: stdin)")
        sp.add_argument("--output", "-o", help="JSON output file (default: stdout)")

    def recovery(sp):
        sp.add_argument("--window", type=_positive("--window"), help="product evaluation window")
        sp.add_argument("--margin", type=_positive("--margin"), default=DEFAULT_MARGIN,
                        help="spectrum cutoff as a multiple of the window (default 4)")
        sp.add_argument("--T", type=_positive("--T"), help="averaging length (default: window)")
        sp.add_argument("--dz", type=_positive("--dz"), help="frequency grid step")
        sp.add_argument("--theta", type=_positive("--theta"), default=DEFAULT_THETA,
                        help="peak threshold relative to the largest peak (default 0.01)")

    sp = sub.add_parser("forward", help="polygon -> characteristic polynomial")
    io(sp)
    sp.add_argument("--report", action="store_true", help="include the admissibility report")
    sp.set_defaults(func=cmd_forward)

    sp = sub.add_parser("spectrum", help="characteristic polynomial -> quasi-eigenvalues")
    io(sp)
    sp.add_argument("--sigma-max", type=_positive("--sigma-max"),
                    help="search window (default: long enough to recover the polynomial)")
    sp.add_argument("--margin", type=_positive("--margin"), default=DEFAULT_MARGIN)
    sp.add_argument("--oversample", type=_positive("--oversample"), default=8.0)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("reconstruct", help="spectrum -> characteristic polynomial")
    io(sp)
    recovery(sp)
    sp.add_argument("--csv", help="also write the mean transform (z, Re A) as CSV here")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("geometry", help="characteristic polynomial -> geometric data")
    io(sp)
    sp.add_argument("--n", type=int, help="known number of sides")
    sp.add_argument("--tol-freq", type=_positive("--tol-freq"))
    sp.add_argument("--tol-one", type=_positive("--tol-one"))
    sp.add_argument("--strict", action="store_true", help="fail on ambiguous rows of D'")
    sp.set_defaults(func=cmd_geometry)

    sp = sub.add_parser("roundtrip", help="polygon -> roots -> polynomial -> geometry, compared")
    io(sp)
    recovery(sp)
    sp.add_argument("--sigma-max", type=_positive("--sigma-max"))
    sp.add_argument("--seed", type=int, default=0, help="random polygon and perturbation seed")
    sp.add_argument("--n", type=int, help="sides of the random polygon (default 3)")
    sp.add_argument("--perturb", nargs=2, type=float, metavar=("A", "EPS"),
                    help="perturb roots by up to A m^-EPS before recovery")
    sp.set_defaults(func=cmd_roundtrip)

    sp = sub.add_parser("oracle", help="roots of F against the quantum-graph spectrum")
    io(sp)
    sp.add_argument("--sigma-max", type=_positive("--sigma-max"))
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("demo", help="reproduce a worked example")
    sp.add_argument("name", choices=DEMOS)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "n", None) is not None and args.n < 1:
        parser.error("--n must be at least 1")
    try:
        result = args.func(args)
        _write(_dumps(result), args.output)
    except ConfigError as exc:
        sys.stderr.write(_dumps({"error": "ConfigError", "message": str(exc)}))
        return 2
    except SteklovError as exc:
        sys.stderr.write(_dumps(exc.to_dict()))
        return 1
    except (ValueError, KeyError) as exc:
        sys.stderr.write(_dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
