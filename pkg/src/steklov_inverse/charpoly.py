"""Polygon data and the characteristic trigonometric polynomial.

A curvilinear polygon enters only through its side lengths and the angle
cosines ``c_j = cos(pi**2 / (2 alpha_j))`` (plus the signs of the matching
sines, which fix the constant term).  The characteristic polynomial is

    F(sigma) = sum_k r_k cos(t_k sigma) - r_0,

obtained by summing ``prod_{j in Ch(zeta)} c_j * cos(|zeta . l| sigma)`` over
sign vectors ``zeta`` with first entry +1, where ``Ch`` is the cyclic set of
sign changes, and subtracting ``prod_j sin(pi**2 / (2 alpha_j))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidSpec, SizeTooLarge
from .results import ExceptionalComponent, GeometryResult

MAX_N = 20
TOL_SPECIAL = 1e-10
EPS_ANGLE = 1e-10
TOL_FREQ_REL = 1e-9


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


_ROUND_OFF = 1e-14


def _snap(v: np.ndarray) -> np.ndarray:
    # angles given in floating point leave tiny residues at 0 and +-1
    v = np.where(np.abs(v) <= _ROUND_OFF, 0.0, v)
    return np.where(np.abs(1.0 - np.abs(v)) <= _ROUND_OFF, np.sign(v), v)


def angle_cosine(alpha):
    return _snap(np.cos(np.pi ** 2 / (2.0 * np.asarray(alpha, dtype=float))))


def angle_sine(alpha):
    return _snap(np.sin(np.pi ** 2 / (2.0 * np.asarray(alpha, dtype=float))))


@dataclass(frozen=True, eq=False)
class PolygonSpec:
    """Side lengths and angle data of an n-gon, clockwise, cyclic indexing.

    Angle ``j`` sits between sides ``j`` and ``j + 1``.  ``angles`` is
    ``None`` when the polygon was given by its cosine vector; the sines then
    default to the non-negative root.
    """

    lengths: np.ndarray
    cosines: np.ndarray
    sines: np.ndarray
    angles: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.lengths)
        if n < 1:
            raise InvalidSpec("a polygon needs at least one side")
        if not (len(self.cosines) == len(self.sines) == n):
            raise InvalidSpec("lengths and angle data must have the same size")
        if self.angles is not None and len(self.angles) != n:
            raise InvalidSpec("lengths and angles must have the same size")
        if not np.all(np.isfinite(self.lengths)) or np.any(self.lengths <= 0):
            raise InvalidSpec(f"side lengths must be positive, got {self.lengths.tolist()}")
        if np.any(np.abs(self.cosines) > 1.0 + 1e-12):
            raise InvalidSpec("cosines must lie in [-1, 1]")
        if self.angles is not None and (np.any(self.angles <= 0) or np.any(self.angles >= np.pi)):
            raise InvalidSpec("angles must lie in the open interval (0, pi)")

    @classmethod
    def from_angles(cls, angles: Sequence[float], lengths: Sequence[float]) -> "PolygonSpec":
        a = _readonly(angles)
        if len(a) != len(lengths):
            raise InvalidSpec("angles and lengths must have the same size")
        if np.any(a <= 0) or np.any(a >= np.pi):
            raise InvalidSpec("angles must lie in the open interval (0, pi)")
        return cls(_readonly(lengths), _readonly(angle_cosine(a)), _readonly(angle_sine(a)), a)

    @classmethod
    def from_cosines(cls, cosines: Sequence[float], lengths: Sequence[float],
                     sine_signs: Optional[Sequence[float]] = None) -> "PolygonSpec":
        c = np.asarray(cosines, dtype=float)
        if len(c) != len(lengths):
            raise InvalidSpec("cosines and lengths must have the same size")
        if np.any(np.abs(c) > 1.0 + 1e-12):
            raise InvalidSpec("cosines must lie in [-1, 1]")
        c = np.clip(c, -1.0, 1.0)
        signs = np.ones_like(c) if sine_signs is None else np.sign(np.asarray(sine_signs, float))
        if np.any(signs == 0):
            raise InvalidSpec("sine signs must be +1 or -1")
        return cls(_readonly(lengths), _readonly(c), _readonly(signs * np.sqrt(1.0 - c * c)))

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.lengths))

    def scaled(self, s: float) -> "PolygonSpec":
        return PolygonSpec(_readonly(self.lengths * s), self.cosines, self.sines, self.angles)

    def to_dict(self) -> dict:
        if self.angles is not None:
            return {"angles": self.angles.tolist(), "lengths": self.lengths.tolist()}
        d = {"cosines": self.cosines.tolist(), "lengths": self.lengths.tolist()}
        if np.any(self.sines < 0):
            d["sine_signs"] = np.where(self.sines < 0, -1.0, 1.0).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolygonSpec":
        if "lengths" not in d:
            raise InvalidSpec("polygon JSON needs a 'lengths' field")
        if "angles" in d:
            return cls.from_angles(d["angles"], d["lengths"])
        if "cosines" in d:
            return cls.from_cosines(d["cosines"], d["lengths"], d.get("sine_signs"))
        raise InvalidSpec("polygon JSON needs 'angles' or 'cosines'")


@dataclass(frozen=True)
class CosineVector:
    values: np.ndarray
    kinds: tuple[str, ...]  # "ordinary" | "special" | "exceptional"
    parities: tuple[int, ...]  # +-1 for exceptional angles, 0 otherwise

    @property
    def exceptional(self) -> tuple[int, ...]:
        return tuple(j for j, k in enumerate(self.kinds) if k == "exceptional")


def classify_cosine(c: float, tol_special: float = TOL_SPECIAL, eps_angle: float = EPS_ANGLE) -> str:
    if abs(c) <= tol_special:
        return "special"
    if abs(1.0 - abs(c)) <= eps_angle:
        return "exceptional"
    return "ordinary"


def cosine_vector(spec: PolygonSpec, tol_special: float = TOL_SPECIAL,
                  eps_angle: float = EPS_ANGLE) -> CosineVector:
    kinds = tuple(classify_cosine(c, tol_special, eps_angle) for c in spec.cosines)
    parities = tuple(int(np.sign(c)) if k == "exceptional" else 0
                     for c, k in zip(spec.cosines, kinds))
    return CosineVector(spec.cosines, kinds, parities)


def angles_for_cosine(c: float, max_branches: int = 8) -> list[float]:
    """All angles in (0, pi) with ``cos(pi**2/(2 alpha)) == c``, largest first.

    ``pi**2/(2 alpha)`` ranges over ``(pi/2, inf)``, so every cosine has
    infinitely many preimages; the first ``max_branches`` are returned.
    """
    if abs(c) > 1:
        raise ValueError("cosine out of range")
    base = math.acos(c)
    thetas = set()
    for k in range(max_branches + 1):
        for th in (base + 2 * math.pi * k, -base + 2 * math.pi * k):
            if th > math.pi / 2:
                thetas.add(th)
    alphas = sorted((math.pi ** 2 / (2 * th) for th in thetas), reverse=True)
    return alphas[:max_branches]


# --------------------------------------------------------------------------
# Admissibility

@dataclass(frozen=True)
class AdmissibilityReport:
    incommensurable: bool
    min_combination: float  # min |zeta . l| over nonzero zeta in {-1,0,1}^n
    witness: tuple[int, ...]
    no_special: bool
    special_indices: tuple[int, ...]
    has_exceptional: bool
    exceptional_indices: tuple[int, ...]
    merged_top: bool = False

    @property
    def admissible(self) -> bool:
        return self.incommensurable and self.no_special

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "incommensurable": self.incommensurable,
            "min_combination": self.min_combination,
            "witness": list(self.witness),
            "no_special": self.no_special,
            "special_indices": list(self.special_indices),
            "has_exceptional": self.has_exceptional,
            "exceptional_indices": list(self.exceptional_indices),
            "merged_top": self.merged_top,
        }


def _ternary_sums(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sums ``zeta . x`` for every ``zeta`` in {-1,0,1}^m, with the vectors."""
    m = len(x)
    if m == 0:
        return np.zeros(1), np.zeros((1, 0), dtype=np.int8)
    z = np.array(list(itertools.product((0, 1, -1), repeat=m)), dtype=np.int8)
    return z @ x, z


def min_ternary_combination(lengths: Sequence[float]) -> tuple[float, tuple[int, ...]]:
    """Exact ``min |zeta . l|`` over nonzero ``zeta`` in {-1,0,1}^n.

    Meet-in-the-middle: both halves are enumerated (3^(n/2) each) and every
    left sum is matched against its nearest negated right sum.
    """
    ell = np.asarray(lengths, dtype=float)
    n = len(ell)
    h = n // 2
    sa, za = _ternary_sums(ell[:h])
    sb, zb = _ternary_sums(ell[h:])
    order = np.argsort(sb, kind="stable")
    sb_sorted = sb[order]
    best, wit = math.inf, None
    # left half zero, right half nonzero (row 0 of each table is the zero vector)
    if len(sb) > 1:
        j = 1 + int(np.argmin(np.abs(sb[1:])))
        best, wit = abs(sb[j]), (0, j)
    # left half nonzero, right half arbitrary
    if len(sa) > 1:
        pos = np.searchsorted(sb_sorted, -sa[1:])
        for cand in (np.clip(pos - 1, 0, len(sb) - 1), np.clip(pos, 0, len(sb) - 1)):
            vals = np.abs(sa[1:] + sb_sorted[cand])
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, wit = float(vals[i]), (i + 1, int(order[cand[i]]))
    zeta = tuple(int(v) for v in np.concatenate([za[wit[0]], zb[wit[1]]]))
    return float(best), zeta


def check_admissible(spec: PolygonSpec, tol_comm: float = 1e-9, tol_special: float = TOL_SPECIAL,
                     eps_angle: float = EPS_ANGLE) -> AdmissibilityReport:
    """Check incommensurability (relative to the perimeter) and special angles."""
    if spec.n > MAX_N:
        raise SizeTooLarge(f"n = {spec.n} exceeds the exhaustive-check limit {MAX_N}")
    m, wit = min_ternary_combination(spec.lengths)
    cv = cosine_vector(spec, tol_special, eps_angle)
    special = tuple(j for j, k in enumerate(cv.kinds) if k == "special")
    F = build_char_poly(spec)
    merged_top = bool(len(F.amps) == 0 or abs(F.amps[-1] - 1.0) > 1e-12)
    return AdmissibilityReport(
        incommensurable=m > tol_comm * spec.perimeter,
        min_combination=float(m),
        witness=wit,
        no_special=not special,
        special_indices=special,
        has_exceptional=bool(cv.exceptional),
        exceptional_indices=cv.exceptional,
        merged_top=merged_top,
    )


# --------------------------------------------------------------------------
# Characteristic polynomial

@dataclass(frozen=True, eq=False)
class CharPoly:
    """``F(sigma) = sum_k amps[k] cos(freqs[k] sigma) - const_term``."""

    freqs: np.ndarray
    amps: np.ndarray
    const_term: float

    def __post_init__(self):
        if len(self.freqs) != len(self.amps):
            raise ValueError("freqs and amps must have the same size")
        if len(self.freqs) and (np.any(self.freqs <= 0) or np.any(np.diff(self.freqs) <= 0)):
            raise ValueError("frequencies must be positive and strictly increasing")

    @classmethod
    def from_terms(cls, freqs, amps, const_term) -> "CharPoly":
        f = np.asarray(freqs, dtype=float)
        order = np.argsort(f, kind="stable")
        return cls(_readonly(f[order]), _readonly(np.asarray(amps, float)[order]), float(const_term))

    @property
    def t_max(self) -> float:
        return float(self.freqs[-1])

    @property
    def scale(self) -> float:
        """``sum |r_k| + |r_0|``, a bound on ``|F|``."""
        return float(np.sum(np.abs(self.amps)) + abs(self.const_term))

    def derivative_bound(self, order: int) -> float:
        return float(np.sum(np.abs(self.amps) * self.freqs ** order)) + (
            abs(self.const_term) if order == 0 else 0.0)

    def __call__(self, sigma, order: int = 0):
        return eval_char_poly(self, sigma, order)

    def pruned(self, tol: float = 1e-12) -> "CharPoly":
        keep = np.abs(self.amps) > tol
        return CharPoly(_readonly(self.freqs[keep]), _readonly(self.amps[keep]), self.const_term)

    def to_dict(self) -> dict:
        return {"freqs": self.freqs.tolist(), "amps": self.amps.tolist(),
                "const_term": self.const_term}

    @classmethod
    def from_dict(cls, d: dict) -> "CharPoly":
        return cls.from_terms(d["freqs"], d["amps"], d["const_term"])


def sign_vectors(n: int) -> np.ndarray:
    """Rows of {+1} x {+-1}^(n-1), enumerated by binary counting.

    Bit ``j`` of the row index flips entry ``j + 1`` to -1.
    """
    bits = np.arange(2 ** (n - 1), dtype=np.int64)
    flips = (bits[:, None] >> np.arange(n - 1)) & 1
    z = np.ones((len(bits), n), dtype=np.int8)
    z[:, 1:] = 1 - 2 * flips
    return z


def change_mask(z: np.ndarray) -> np.ndarray:
    """Boolean mask of the cyclic sign changes ``z_j != z_{j+1}``."""
    return z != np.roll(z, -1, axis=-1)


def char_poly_terms(spec: PolygonSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unmerged ``(|zeta . l|, p_zeta)`` pairs in enumeration order."""
    if spec.n > MAX_N:
        raise SizeTooLarge(f"n = {spec.n} exceeds the enumeration limit {MAX_N}")
    z = sign_vectors(spec.n)
    freqs = np.abs(z.astype(float) @ spec.lengths)
    coef = np.where(change_mask(z), spec.cosines[None, :], 1.0).prod(axis=1)
    return freqs, coef


def build_char_poly(spec: PolygonSpec, tol_freq: Optional[float] = None) -> CharPoly:
    """Assemble the merged, sorted characteristic polynomial of ``spec``.

    Frequencies closer than ``tol_freq`` (default ``1e-9 * L``) are merged by
    summing amplitudes; a frequency within ``tol_freq`` of zero contributes a
    constant, which is folded into ``const_term``. Terms whose amplitude
    cancels exactly are dropped.
    """
    if tol_freq is None:
        tol_freq = TOL_FREQ_REL * spec.perimeter
    freqs, coef = char_poly_terms(spec)
    r0 = float(np.prod(spec.sines))

    order = np.argsort(freqs, kind="stable")
    f_sorted, c_sorted = freqs[order], coef[order]
    starts = np.concatenate([[True], np.diff(f_sorted) > tol_freq])
    group = np.cumsum(starts) - 1
    n_groups = int(group[-1]) + 1
    g_freq = f_sorted[starts]
    g_amp = np.zeros(n_groups)
    # np.add.at sums in index order: fixed, reproducible summation order
    np.add.at(g_amp, group, c_sorted)

    zero = g_freq <= tol_freq
    if np.any(zero):
        r0 -= float(np.sum(g_amp[zero]))
    keep = ~zero & (g_amp != 0.0)
    return CharPoly(_readonly(g_freq[keep]), _readonly(g_amp[keep]), r0)


_CHUNK = 1 << 22


def eval_char_poly(F: CharPoly, sigma, order: int = 0):
    """Exact ``order``-th derivative of ``F`` at ``sigma`` (scalar or array)."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    s = np.asarray(sigma, dtype=float)
    flat = s.reshape(-1)
    out = np.empty_like(flat)
    weights = F.amps * F.freqs ** order
    trig = (np.cos, np.sin, np.cos, np.sin)[order % 4]
    sign = (1.0, -1.0, -1.0, 1.0)[order % 4]
    step = max(1, _CHUNK // max(1, len(F.freqs)))
    for i in range(0, len(flat), step):
        blk = flat[i:i + step]
        out[i:i + step] = sign * (trig(np.outer(blk, F.freqs)) @ weights)
    if order == 0:
        out -= F.const_term
    return out.reshape(s.shape) if s.ndim else float(out[0])


def char_polys_equal(a: CharPoly, b: CharPoly, tol: float = 1e-10, amp_floor: float = 1e-12) -> bool:
    """Term-wise equality after dropping amplitudes below ``amp_floor``."""
    pa, pb = a.pruned(amp_floor), b.pruned(amp_floor)
    if len(pa.freqs) != len(pb.freqs):
        return False
    return bool(np.all(np.abs(pa.freqs - pb.freqs) <= tol)
                and np.all(np.abs(pa.amps - pb.amps) <= tol)
                and abs(pa.const_term - pb.const_term) <= tol)


# --------------------------------------------------------------------------
# Geometry view of a polygon and loose equivalence

def geometry_of_spec(spec: PolygonSpec, eps_angle: float = EPS_ANGLE) -> GeometryResult:
    """The data an inverse recovery should return for ``spec``."""
    cv = cosine_vector(spec, eps_angle=eps_angle)
    exc = cv.exceptional
    n = spec.n
    if not exc:
        return GeometryResult(n=n, K=0, ordered_lengths=tuple(map(float, spec.lengths)),
                              cosines=tuple(map(float, spec.cosines)))
    comps = []
    for i, v in enumerate(exc):
        w = exc[(i + 1) % len(exc)]
        # arcs from side v+1 up to side w (cyclically); angle v is the start vertex
        count = (w - v) % n or n
        sides = [(v + 1 + k) % n for k in range(count)]
        arcs = [float(spec.lengths[s]) for s in sides]
        inner = [float(spec.cosines[s]) for s in sides[:-1]]
        parity = "even" if cv.parities[v] == cv.parities[w] else "odd"
        comps.append(ExceptionalComponent.canonical(arcs, inner, parity))
    comps.sort(key=lambda c: (c.arc_lengths[0], c.arc_lengths))
    return GeometryResult(n=n, K=len(exc), components=tuple(comps))


def _cyclic_views(lengths: np.ndarray, cosines: np.ndarray) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    n = len(lengths)
    idx = np.arange(n)
    for shift in range(n):
        yield lengths[(idx + shift) % n], cosines[(idx + shift) % n]
        # reversal: sides l_{-i}, angle between l_{-i} and l_{-i-1} is c_{-i-1}
        yield lengths[(shift - idx) % n], cosines[(shift - idx - 1) % n]


def loose_equivalent(a: GeometryResult, b: GeometryResult, tol: float = 1e-9,
                     cos_tol: Optional[float] = None) -> bool:
    """Equality up to enumeration, orientation and a global cosine sign.

    ``tol`` applies to lengths, ``cos_tol`` (default ``tol``) to cosines.
    Exceptional results are compared component by component, in any order.
    """
    ctol = tol if cos_tol is None else cos_tol
    if a.n != b.n or a.K != b.K or a.underdetermined != b.underdetermined:
        return False
    if a.underdetermined:
        la, lb = sorted(a.ordered_lengths or ()), sorted(b.ordered_lengths or ())
        same_inv = all(abs(a.invariants.get(k, math.inf) - v) <= ctol for k, v in b.invariants.items())
        return len(la) == len(lb) and np.allclose(la, lb, atol=tol, rtol=0) and same_inv
    if a.K == 0:
        la, ca = np.array(a.ordered_lengths), np.array(a.cosines)
        lb, cb = np.array(b.ordered_lengths), np.array(b.cosines)
        if la.shape != lb.shape or ca.shape != cb.shape:
            return False
        for lv, cv in _cyclic_views(lb, cb):
            if np.all(np.abs(la - lv) <= tol) and (
                    np.all(np.abs(ca - cv) <= ctol) or np.all(np.abs(ca + cv) <= ctol)):
                return True
        return False
    if len(a.components) != len(b.components):
        return False
    return _match_components(list(a.components), list(b.components), tol, ctol)


def _components_equivalent(a: ExceptionalComponent, b: ExceptionalComponent,
                           tol: float, ctol: float) -> bool:
    if a.parity != b.parity or len(a.arc_lengths) != len(b.arc_lengths):
        return False
    la, ca = np.array(a.arc_lengths), np.array(a.cosines)
    for lb, cb in ((np.array(b.arc_lengths), np.array(b.cosines)),
                   (np.array(b.arc_lengths[::-1]), np.array(b.cosines[::-1]))):
        if np.all(np.abs(la - lb) <= tol) and (
                np.all(np.abs(ca - cb) <= ctol) or np.all(np.abs(ca + cb) <= ctol)):
            return True
    return False


def _match_components(ca, cb, tol, ctol) -> bool:
    if not ca:
        return not cb
    head, rest = ca[0], ca[1:]
    for i, c in enumerate(cb):
        if _components_equivalent(head, c, tol, ctol) and \
                _match_components(rest, cb[:i] + cb[i + 1:], tol, ctol):
            return True
    return False


# --------------------------------------------------------------------------
# Random test polygons

def default_separation(n: int) -> float:
    """Relative separation margin that uniform (0.5, 1.5) lengths meet often enough."""
    return {1: 0.03, 2: 0.03, 3: 0.03, 4: 0.02, 5: 0.008}.get(n, 0.003)


def random_admissible_spec(rng: np.random.Generator, n: int, tol_comm: Optional[float] = None,
                           cos_range: tuple[float, float] = (0.45, 0.9),
                           max_tries: int = 100_000) -> PolygonSpec:
    """Draw a non-exceptional admissible polygon with a separation margin.

    Lengths are uniform on (0.5, 1.5) and rejected until every nonzero
    {-1,0,1}-combination exceeds ``tol_comm * L`` (default from
    :func:`default_separation`); cosines have modulus in ``cos_range`` and
    random signs, sines are positive.
    """
    if tol_comm is None:
        tol_comm = default_separation(n)
    for _ in range(max_tries):
        ell = rng.uniform(0.5, 1.5, size=n)
        m, _ = min_ternary_combination(ell)
        if m > tol_comm * ell.sum():
            break
    else:
        raise RuntimeError("could not draw admissible lengths; relax tol_comm")
    c = rng.uniform(*cos_range, size=n) * rng.choice((-1.0, 1.0), size=n)
    return PolygonSpec.from_cosines(c, ell)
