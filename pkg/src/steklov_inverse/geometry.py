"""Side lengths, side order and angle cosines from a characteristic polynomial.

The frequencies ``|zeta . l|`` determine the lengths sorted by size.  With
the sorted lengths ``l'`` every frequency is labelled by a subset ``J`` (the
sides carrying a plus sign), and the amplitudes of one- and two-element
subsets form the symmetric matrix ``R'``.  Its companion

    D'_{jk} = R'_{jj} R'_{kk} / R'_{jk}

equals ``c_p**2 < 1`` when sides ``j`` and ``k`` meet at a non-exceptional
vertex ``p`` and 1 otherwise, and ``D'_{kk} = r'_k = c_left c_right``.  The
order of the sides is then a walk along the sub-unit entries of ``D'``.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charpoly import CharPoly
from .errors import (AmbiguousExclusion, FrequencyNotFound, InvalidDiscriminant, NonPositiveLength,
                     NotPowerOfTwo, OddAdjacencyCount, SignInconsistency, WalkStuck, ZeroAmplitude)
from .results import ExceptionalComponent, GeometryResult

TOL_FREQ_REL = 1e-9
TOL_ONE = 1e-6
TOL_ZERO = 1e-9
AMP_FLOOR = 1e-12


@dataclass(frozen=True)
class SortedLengths:
    values: tuple[float, ...]
    total: float

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class AdjacencyData:
    Rp: np.ndarray
    Dp: np.ndarray
    tol_one: float = TOL_ONE

    @property
    def n(self) -> int:
        return self.Rp.shape[0]

    def sub_unit(self) -> np.ndarray:
        """Boolean mask of off-diagonal entries of ``D'`` below one."""
        mask = self.Dp < 1.0 - self.tol_one
        np.fill_diagonal(mask, False)
        return mask


def _default_tol_freq(F: CharPoly) -> float:
    return TOL_FREQ_REL * max(F.t_max, 1.0)


def _log2_count(count: int) -> int:
    if count < 1 or count & (count - 1):
        raise NotPowerOfTwo(f"{count} frequencies is not a power of two")
    return count.bit_length() - 1


def recover_sorted_lengths(F: CharPoly, tol_freq: Optional[float] = None) -> SortedLengths:
    """Side lengths in increasing order from the frequency set alone.

    Step ``k`` removes every frequency of the form ``|L - 2 sum_{j<k} f_j l'_j|``
    (``f_j`` in {0, 1}) and reads ``l'_k = (L - max remaining) / 2``.

    Raises
    ------
    NotPowerOfTwo
        If the number of frequencies is not ``2**(n-1)``.
    AmbiguousExclusion
        If an excluded value matches several frequencies, or nothing is left.
    NonPositiveLength
        If a recovered length is not positive.
    """
    t = np.sort(np.asarray(F.freqs, dtype=float))
    n = _log2_count(len(t)) + 1
    if tol_freq is None:
        tol_freq = _default_tol_freq(F)
    L = float(t[-1])
    if n == 1:
        return SortedLengths((L,), L)
    lens: list[float] = []
    for k in range(1, n):
        sums = np.zeros(1)
        for ell in lens:
            sums = np.concatenate([sums, sums + ell])
        excl = np.abs(L - 2.0 * sums)
        keep = np.ones(len(t), dtype=bool)
        for x in excl:
            hit = np.nonzero(np.abs(t - x) <= tol_freq)[0]
            if len(hit) > 1:
                raise AmbiguousExclusion(
                    f"step {k}: excluded value {x:.12g} matches {len(hit)} frequencies")
            keep[hit] = False
        if not np.any(keep):
            raise AmbiguousExclusion(f"step {k}: every frequency was excluded")
        lk = 0.5 * (L - float(np.max(t[keep])))
        if lk <= 0:
            raise NonPositiveLength(f"step {k} gives a non-positive length {lk:.6g}")
        lens.append(lk)
    last = L - sum(lens)
    if last <= 0:
        raise NonPositiveLength(f"last length {last:.6g} is not positive")
    lens.append(last)
    return SortedLengths(tuple(lens), L)


def _amplitude_at(F: CharPoly, t: float, tol_freq: float, label: str) -> float:
    i = int(np.argmin(np.abs(F.freqs - t)))
    if abs(F.freqs[i] - t) > tol_freq:
        raise FrequencyNotFound(f"no frequency near {t:.12g} for subset {label}")
    r = float(F.amps[i])
    if abs(r) <= AMP_FLOOR:
        raise ZeroAmplitude(f"amplitude for subset {label} vanishes (special angle?)")
    return r


def build_adjacency(F: CharPoly, SL: SortedLengths, tol_freq: Optional[float] = None,
                    tol_one: float = TOL_ONE) -> AdjacencyData:
    """The matrices ``R'`` (subset amplitudes) and ``D'`` for ``n >= 3``."""
    n = SL.n
    if n < 3:
        raise ValueError("the adjacency matrices need n >= 3")
    if tol_freq is None:
        tol_freq = _default_tol_freq(F)
    ell = np.asarray(SL.values)
    Rp = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            zeta = -np.ones(n)
            zeta[[j, k]] = 1.0
            t = abs(float(zeta @ ell))
            Rp[j, k] = Rp[k, j] = _amplitude_at(F, t, tol_freq, f"{{{j + 1},{k + 1}}}")
    d = np.diag(Rp)
    Dp = np.outer(d, d) / Rp
    return AdjacencyData(Rp, Dp, tol_one)


def count_exceptional(D: AdjacencyData) -> int:
    """``K = n - #{(j, k): j != k, D'_{jk} < 1} / 2``."""
    count = int(np.sum(D.sub_unit()))
    if count % 2:
        raise OddAdjacencyCount(f"{count} sub-unit off-diagonal entries; D' is inconsistent")
    return D.n - count // 2


def _neighbours(D: AdjacencyData, strict: bool) -> tuple[list[list[int]], list[str]]:
    """Sub-unit neighbours of each row, at most two (the smallest entries)."""
    mask = D.sub_unit()
    nbrs, notes = [], []
    for j in range(D.n):
        cols = [int(k) for k in np.nonzero(mask[j])[0]]
        if len(cols) > 2:
            msg = f"row {j + 1} of D' has {len(cols)} entries below one; keeping the two smallest"
            if strict:
                raise WalkStuck(msg)
            notes.append(msg)
            cols = sorted(sorted(cols, key=lambda k: D.Dp[j, k])[:2])
        nbrs.append(cols)
    # keep the relation symmetric after pruning
    for j in range(D.n):
        nbrs[j] = [k for k in nbrs[j] if j in nbrs[k]]
    return nbrs, notes


def _chain_signs(abs_c: list[float], inner_sides: list[int], Dp: np.ndarray) -> list[float]:
    """Signs along a chain: ``sign(c_{m-1} c_m) = sign(D'_{kk})`` for the side between."""
    out = [abs_c[0]]
    for c, side in zip(abs_c[1:], inner_sides):
        s = math.copysign(1.0, out[-1]) * math.copysign(1.0, Dp[side, side])
        out.append(s * c)
    return out


def recover_order_and_cosines(F: CharPoly, SL: SortedLengths, D: AdjacencyData,
                              strict: bool = False) -> GeometryResult:
    """Walk ``D'`` to order the sides and read the cosines (``n >= 3``).

    Without exceptional angles the walk starts at the shortest side and goes
    first to the neighbour with the smaller index; the first cosine is made
    non-negative.  Otherwise each maximal chain of sub-unit entries is one
    exceptional boundary component; its parity is the sign of the product of
    ``D'_{kk}`` over its arcs.
    """
    n = SL.n
    nbrs, notes = _neighbours(D, strict)
    for msg in notes:
        _warnings.warn(msg, RuntimeWarning, stacklevel=2)
    Dp = D.Dp
    ell = SL.values
    K = n - sum(len(b) for b in nbrs) // 2

    if K == 0:
        order = [0]
        prev, cur = 0, nbrs[0][0]
        while cur != 0:
            if cur in order:
                raise WalkStuck(f"walk revisits side {cur + 1}")
            order.append(cur)
            nxt = [k for k in nbrs[cur] if k != prev]
            if len(nxt) != 1:
                raise WalkStuck(f"row {cur + 1} of D' has no continuation")
            prev, cur = cur, nxt[0]
        if len(order) != n:
            raise WalkStuck(f"walk closes after {len(order)} of {n} sides")
        # c_m sits between sides m and m+1 (cyclically)
        abs_c = [math.sqrt(Dp[order[m], order[(m + 1) % n]]) for m in range(n)]
        c = _chain_signs(abs_c, [order[m] for m in range(1, n)], Dp)
        if math.copysign(1.0, c[-1]) * math.copysign(1.0, c[0]) != math.copysign(1.0, Dp[order[0], order[0]]):
            raise SignInconsistency("sign chain around the polygon does not close")
        return GeometryResult(n=n, K=0, ordered_lengths=tuple(ell[k] for k in order),
                              cosines=tuple(float(x) + 0.0 for x in c), warnings=tuple(notes))

    seen = [False] * n
    comps = []
    starts = [j for j in range(n) if len(nbrs[j]) == 1] + [j for j in range(n) if not nbrs[j]]
    for s in starts:
        if seen[s]:
            continue
        chain = [s]
        seen[s] = True
        prev, cur = None, s
        while True:
            nxt = [k for k in nbrs[cur] if k != prev]
            if not nxt:
                break
            if seen[nxt[0]]:
                raise WalkStuck(f"component walk revisits side {nxt[0] + 1}")
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen[cur] = True
        abs_c = [math.sqrt(Dp[a, b]) for a, b in zip(chain, chain[1:])]
        c = _chain_signs(abs_c, chain[1:-1], Dp) if abs_c else []
        sign = math.prod(math.copysign(1.0, Dp[k, k]) for k in chain)
        comps.append(ExceptionalComponent.canonical(
            [ell[k] for k in chain], c, "even" if sign > 0 else "odd"))
    if not all(seen):
        raise WalkStuck("sides left over after tracing every component (closed chain with K > 0)")
    comps.sort(key=lambda cp: (cp.arc_lengths[0], cp.arc_lengths))
    return GeometryResult(n=n, K=K, components=tuple(comps), warnings=tuple(notes))


def recover_small_n(F: CharPoly, tol_freq: Optional[float] = None, tol_zero: float = TOL_ZERO,
                    n_expected: Optional[int] = None) -> GeometryResult:
    """Closed-form recovery when ``F`` has one or two frequencies.

    With one frequency and ``n_expected == 2`` the input is read as a two-gon
    with equal sides, for which only the side length and the cosine of the
    angle sum are determined; the result is flagged ``underdetermined``.
    """
    count = len(F.freqs)
    r0 = float(F.const_term)
    if count == 1 and n_expected == 2:
        L = F.t_max
        return GeometryResult(n=2, K=0, ordered_lengths=(L / 2, L / 2), underdetermined=True,
                              invariants={"cos_angle_sum": -r0})
    if count == 1:
        ell = (F.t_max,)
        if abs(r0) <= tol_zero:
            return GeometryResult(n=1, K=1, components=(ExceptionalComponent((ell[0],), (), "even"),))
        if abs(r0) > 1.0 + tol_zero:
            raise InvalidDiscriminant(f"|r0| = {abs(r0):.6g} exceeds one")
        return GeometryResult(n=1, K=0, ordered_lengths=ell,
                              cosines=(math.sqrt(max(0.0, 1.0 - r0 * r0)),))
    if count != 2:
        raise ValueError("recover_small_n handles one or two frequencies")
    t1, L = float(F.freqs[0]), float(F.freqs[1])
    r1 = float(F.amps[0])
    ell = ((L - t1) / 2, (L + t1) / 2)
    if ell[0] <= 0:
        raise NonPositiveLength("the two frequencies do not describe positive lengths")
    if abs(r0) <= tol_zero:
        if abs(abs(r1) - 1.0) <= tol_zero:
            par = "even" if r1 > 0 else "odd"
            comps = tuple(ExceptionalComponent((x,), (), par) for x in ell)
            return GeometryResult(n=2, K=2, components=comps)
        comp = ExceptionalComponent.canonical(ell, (r1,), "even")
        return GeometryResult(n=2, K=1, components=(comp,))
    b = 1.0 + r1 * r1 - r0 * r0
    disc = b * b - 4.0 * r1 * r1
    if disc < -tol_zero:
        raise InvalidDiscriminant(f"discriminant {disc:.3g} is negative")
    rho = math.sqrt((b + math.sqrt(max(disc, 0.0))) / 2.0)
    return GeometryResult(n=2, K=0, ordered_lengths=ell, cosines=(rho, r1 / rho))


def recover_geometry(F: CharPoly, n_expected: Optional[int] = None, tol_freq: Optional[float] = None,
                     tol_one: float = TOL_ONE, strict: bool = False) -> GeometryResult:
    """Everything the polynomial determines about the polygon.

    Parameters
    ----------
    F : CharPoly
        Normalised so that the top amplitude is one.
    n_expected : int, optional
        Known number of sides; only consulted to tell an equal-sided two-gon
        from a one-gon and to reject frequency counts that do not fit.
    tol_freq, tol_one : float
        Frequency matching tolerance and the margin in the ``D' < 1`` test.
    strict : bool
        Raise instead of warning when a row of ``D'`` has too many sub-unit entries.
    """
    F = F.pruned(AMP_FLOOR)
    count = len(F.freqs)
    if count == 0:
        raise NotPowerOfTwo("no frequencies")
    n = _log2_count(count) + 1
    if n_expected is not None and n_expected != n and not (n_expected == 2 and count == 1):
        raise NotPowerOfTwo(f"{count} frequencies do not fit n = {n_expected}")
    if count <= 2:
        return recover_small_n(F, tol_freq, n_expected=n_expected)
    SL = recover_sorted_lengths(F, tol_freq)
    D = build_adjacency(F, SL, tol_freq, tol_one)
    count_exceptional(D)
    return recover_order_and_cosines(F, SL, D, strict)
