"""Root isolation for smooth band-limited functions on an interval.

The interval is cut into cells no wider than ``h``.  Each cell is tested
with a second-order Taylor bound around its midpoint ``m`` (radius ``rho``,
``B2`` a global bound on ``|f''|``):

* excluded  if ``|f(m)| > |f'(m)| rho + B2 rho**2 / 2``  (no root),
* monotone  if ``|f'(m)| > B2 rho``                     (at most one root).

Cells passing neither test are split until they are narrower than
``sqrt(touch_tol / B2)``.  What is left are tiny clusters where ``f`` and
``f'`` are both small; those are resolved explicitly as a double root, a
close pair of simple roots, or nothing.  Simple roots are polished by a
Newton iteration that falls back to bisection whenever the step leaves the
bracket.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MultiplicityOverflow

log = logging.getLogger(__name__)

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RootOpts:
    oversample: float = 8.0
    xtol_rel: float = 1e-12
    touch_tol_rel: float = 1e-8
    split: int = 8
    max_iter: int = 100


def safeguarded_newton(f: Func, df: Func, lo: np.ndarray, hi: np.ndarray,
                       xtol_rel: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Polish one simple root inside each bracket ``[lo, hi]`` (vectorised)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    flo = f(lo)
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        dfx = df(x)
        hit = fx == 0
        # shrink the bracket on the side that keeps the sign change
        same = np.sign(fx) == np.sign(flo)
        lo = np.where(same & ~hit, x, lo)
        flo = np.where(same & ~hit, fx, flo)
        hi = np.where(~same & ~hit, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - fx / dfx
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(hit, x, xn)
        tol = xtol_rel * np.maximum(np.abs(x), 1.0)
        done = hit | (np.abs(xn - x) <= tol) | (hi - lo <= tol)
        x = xn
        if np.all(done):
            break
    return x


def _bisect_scalar(g: Func, a: float, b: float, ga: float, iters: int = 200) -> float:
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        gm = float(g(np.array([m]))[0])
        if gm == 0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def isolate_roots(f: Func, df: Func, d2_bound: float, a: float, b: float, h: float,
                  touch_tol: float, d2f: Optional[Func] = None,
                  opts: RootOpts = RootOpts(), skip_left_cluster: bool = False,
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Roots of ``f`` in ``(a, b]`` as ``(locations, multiplicities)``.

    Multiplicity is 1 or 2; a point where ``f``, ``f'`` and ``f''`` are all
    below ``touch_tol`` raises :class:`MultiplicityOverflow`.  With
    ``skip_left_cluster`` an unresolved cluster touching ``a`` is ignored
    (used when ``a`` is itself a known multiple root).
    """
    B2 = max(float(d2_bound), 1e-300)
    n0 = max(1, int(math.ceil((b - a) / h)))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    w_min = math.sqrt(max(touch_tol, 1e-300) / B2)

    brackets_lo, brackets_hi = [], []
    unresolved = []
    while lo.size:
        m = 0.5 * (lo + hi)
        rho = 0.5 * (hi - lo)
        fm, dfm = f(m), df(m)
        excluded = np.abs(fm) > np.abs(dfm) * rho + 0.5 * B2 * rho ** 2
        monotone = ~excluded & (np.abs(dfm) > B2 * rho)
        if np.any(monotone):
            ml, mh = lo[monotone], hi[monotone]
            fl, fh = f(ml), f(mh)
            crossing = (np.sign(fl) * np.sign(fh) < 0) | (fh == 0)
            brackets_lo.append(ml[crossing])
            brackets_hi.append(mh[crossing])
        rest = ~excluded & ~monotone
        lo, hi = lo[rest], hi[rest]
        if not lo.size:
            break
        tiny = (hi - lo) <= w_min
        if np.any(tiny):
            unresolved.append(np.stack([lo[tiny], hi[tiny]], axis=1))
        lo, hi = lo[~tiny], hi[~tiny]
        k = opts.split
        frac = np.arange(k + 1) / k
        sub = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        lo, hi = sub[:, :-1].ravel(), sub[:, 1:].ravel()

    roots = [np.zeros(0)]
    mults = [np.zeros(0, dtype=int)]
    blo = np.concatenate(brackets_lo) if brackets_lo else np.zeros(0)
    bhi = np.concatenate(brackets_hi) if brackets_hi else np.zeros(0)

    extra_lo, extra_hi = [], []
    if unresolved:
        cells = np.concatenate(unresolved)
        cells = cells[np.argsort(cells[:, 0])]
        clusters = []
        start, end = cells[0]
        for l, r in cells[1:]:
            if l <= end * (1 + 1e-15) + 1e-300:
                end = max(end, r)
            else:
                clusters.append((start, end))
                start, end = l, r
        clusters.append((start, end))
        for L, R in clusters:
            if skip_left_cluster and L <= a:
                continue
            kind = _resolve_cluster(f, df, d2f, B2, L, R, touch_tol)
            if kind[0] == "double":
                roots.append(np.array([kind[1]]))
                mults.append(np.array([2]))
            elif kind[0] == "brackets":
                for bl, bh in kind[1]:
                    extra_lo.append(bl)
                    extra_hi.append(bh)
    if extra_lo:
        blo = np.concatenate([blo, extra_lo])
        bhi = np.concatenate([bhi, extra_hi])
    if blo.size:
        roots.append(safeguarded_newton(f, df, blo, bhi, opts.xtol_rel, opts.max_iter))
        mults.append(np.ones(blo.size, dtype=int))
    x = np.concatenate(roots)
    mu = np.concatenate(mults)
    order = np.argsort(x, kind="stable")
    return x[order], mu[order]


def _resolve_cluster(f, df, d2f, B2, L, R, touch_tol):
    fL, fR = float(f(np.array([L]))[0]), float(f(np.array([R]))[0])
    if fL == 0.0 and fR == 0.0:
        fL = float(f(np.array([L - (R - L)]))[0])
    if np.sign(fL) * np.sign(fR) < 0 or fR == 0.0:
        x = 0.5 * (L + R)
        _check_overflow(f, df, d2f, B2, x, touch_tol)
        return ("brackets", [(L, R)])
    dL, dR = float(df(np.array([L]))[0]), float(df(np.array([R]))[0])
    if np.sign(dL) * np.sign(dR) < 0:
        xc = _bisect_scalar(df, L, R, dL)
    else:
        xs = np.linspace(L, R, 33)
        xc = float(xs[np.argmin(np.abs(f(xs)))])
    fc = float(f(np.array([xc]))[0])
    if abs(fc) <= touch_tol:
        _check_overflow(f, df, d2f, B2, xc, touch_tol)
        return ("double", xc)
    if np.sign(fc) != np.sign(fL):
        return ("brackets", [(L, xc), (xc, R)])
    return ("none", None)


def _check_overflow(f, df, d2f, B2, x, touch_tol):
    pt = np.array([x])
    if d2f is None:
        eps = 1e-4 / math.sqrt(B2) if B2 > 0 else 1e-6
        d2 = float((df(pt + eps) - df(pt - eps))[0] / (2 * eps))
    else:
        d2 = float(d2f(pt)[0])
    if abs(float(f(pt)[0])) <= touch_tol and abs(float(df(pt)[0])) <= touch_tol and abs(d2) <= touch_tol:
        raise MultiplicityOverflow(f"root of multiplicity > 2 suspected near {x:.15g}")
