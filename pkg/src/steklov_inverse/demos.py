"""Worked examples shipped as JSON data under ``corpus/``."""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import Callable

import numpy as np

from .charpoly import (PolygonSpec, build_char_poly, char_polys_equal, geometry_of_spec,
                       loose_equivalent)
from .errors import SteklovError
from .geometry import build_adjacency, recover_geometry, recover_sorted_lengths
from .results import ExceptionalComponent, GeometryResult

DEMOS = ("ex3.1", "ex3.2", "ex3.3-parallelogram", "ex3.4-triangles", "ex3.5-commensurable",
         "ex3.6-twogon")


def load_corpus(name: str) -> dict:
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    text = resources.files(__package__).joinpath("corpus").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def straight_triangle(angles, perimeter: float = 1.0) -> PolygonSpec:
    """Triangle with the given angles; side ``j`` lies opposite angle ``j + 1``."""
    a = np.asarray(angles, dtype=float)
    ell = np.sin(np.roll(a, -1))
    return PolygonSpec.from_angles(a, perimeter * ell / ell.sum())


def _close(a, b, tol: float) -> bool:
    return bool(np.allclose(np.asarray(a, float), np.asarray(b, float), atol=tol, rtol=0))


def _demo_full(d: dict) -> dict:
    spec = PolygonSpec.from_dict(d["spec"])
    F = build_char_poly(spec)
    exp = d["expected"]
    out = {"description": d["description"], "spec": spec.to_dict(), "charpoly": F.to_dict()}
    checks = {"amps": _close(F.amps, exp["amps"], 1e-12),
              "const_term": abs(F.const_term - exp["const_term"]) <= 1e-12}
    if "freqs" in exp:
        checks["freqs"] = _close(F.freqs, exp["freqs"], 1e-12)
    SL = recover_sorted_lengths(F)
    D = build_adjacency(F, SL)
    out["sorted_lengths"] = list(SL.values)
    out["Rp"] = D.Rp.tolist()
    out["Dp"] = D.Dp.tolist()
    checks["Rp"] = _close(D.Rp, exp["Rp"], 1e-12)
    checks["Dp"] = _close(D.Dp, exp["Dp"], 1e-12)
    geo = recover_geometry(F)
    out["geometry"] = geo.to_dict()
    checks["loose_equivalent"] = loose_equivalent(geo, geometry_of_spec(spec))
    out["checks"] = checks
    return out


def _demo_parallelogram(d: dict) -> dict:
    polys = []
    for a in d["a_values"]:
        spec = PolygonSpec.from_angles(d["angles"], [a, 1 - a, a, 1 - a])
        polys.append(build_char_poly(spec).pruned())
    exp = d["expected"]
    same = all(char_polys_equal(polys[0], p, tol=1e-12) for p in polys[1:])
    match = _close(polys[0].freqs, exp["freqs"], 1e-12) and _close(polys[0].amps, exp["amps"], 1e-12) \
        and abs(polys[0].const_term - exp["const_term"]) <= 1e-12
    return {"description": d["description"], "a_values": d["a_values"],
            "charpolys": [p.to_dict() for p in polys],
            "checks": {"identical": same, "expected_form": bool(match)}}


def _demo_triangles(d: dict) -> dict:
    specs = [straight_triangle(a) for a in d["angles"]]
    polys = [build_char_poly(s).pruned() for s in specs]
    exp = d["expected"]
    return {"description": d["description"], "specs": [s.to_dict() for s in specs],
            "charpolys": [p.to_dict() for p in polys],
            "checks": {"identical": char_polys_equal(polys[0], polys[1], tol=1e-12),
                       "const_term": abs(polys[0].const_term - exp["const_term"]) <= 1e-12}}


def _demo_commensurable(d: dict) -> dict:
    specs = [PolygonSpec.from_dict(s) for s in d["specs"]]
    polys = [build_char_poly(s) for s in specs]
    try:
        recover_geometry(polys[0])
        err = None
    except SteklovError as exc:
        err = exc.code
    return {"description": d["description"], "specs": [s.to_dict() for s in specs],
            "charpolys": [p.to_dict() for p in polys], "inverse_error": err,
            "checks": {"identical": char_polys_equal(polys[0], polys[1], tol=1e-10),
                       "inverse_refused": err is not None}}


def _demo_twogon(d: dict) -> dict:
    rows, ok = [], True
    for pair in d["angle_pairs"]:
        spec = PolygonSpec.from_angles(pair, d["lengths"])
        F = build_char_poly(spec)
        geo: GeometryResult = recover_geometry(F, n_expected=2)
        want = math.cos(sum(math.pi ** 2 / (2 * a) for a in pair))
        ok &= geo.underdetermined and abs(geo.invariants["cos_angle_sum"] - want) <= 1e-12
        rows.append({"angles": list(pair), "charpoly": F.to_dict(), "geometry": geo.to_dict()})
    return {"description": d["description"], "cases": rows, "checks": {"underdetermined": bool(ok)}}


def _demo_exceptional(d: dict) -> dict:
    out = _demo_full(d)
    geo = GeometryResult.from_dict(out["geometry"])
    want = GeometryResult(n=geo.n, K=d["expected"]["K"], components=tuple(
        ExceptionalComponent.from_dict(c) for c in d["expected"]["components"]))
    out["checks"]["K"] = geo.K == d["expected"]["K"]
    out["checks"]["components"] = loose_equivalent(geo, want, tol=1e-12)
    return out


_RUNNERS: dict[str, Callable[[dict], dict]] = {
    "ex3.1": _demo_full,
    "ex3.2": _demo_exceptional,
    "ex3.3-parallelogram": _demo_parallelogram,
    "ex3.4-triangles": _demo_triangles,
    "ex3.5-commensurable": _demo_commensurable,
    "ex3.6-twogon": _demo_twogon,
}


def run_demo(name: str) -> dict:
    """Reproduce one example; ``result["checks"]`` maps each claim to a verdict."""
    out = {"demo": name}
    out.update(_RUNNERS[name](load_corpus(name)))
    out["ok"] = all(out["checks"].values())
    return out
