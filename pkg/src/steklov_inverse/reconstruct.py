"""Recover a characteristic polynomial from a (quasi-)eigenvalue sequence.

The roots determine ``F`` up to a constant through the canonical product

    Q(sigma) = sigma^(2 m0) prod_m (1 - sigma**2 / sigma_m**2),   F = C Q,

and the frequencies and amplitudes of ``F`` are read off the Bohr mean
``A(z) = M[exp(-i s z) Q(s)]``: ``A`` is nonzero exactly at the frequencies,
``r_k = 2 C A(t_k)``, ``r_0 = -C A(0)`` and ``C`` is fixed by the top
amplitude being one.

Numerically the product is truncated at ``cutoff_index`` with an integral
correction for the missing factors.  The mean over ``[0, T]`` is taken with
Kaiser weights (beta = 14) instead of uniform ones: the main lobe of the
kernel is wider (it ends near ``nu T = 29``) but all leakage beyond it stays
below ``4e-6``, against ``O(1/(nu T))`` for the plain average.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy.optimize import minimize_scalar
from scipy.special import i0

from .charpoly import CharPoly
from .errors import (DivergenceSuspected, FrequencyCountNotPow2, ResolutionTooCoarse,
                     ThresholdAmbiguous, WindowExceeded)
from .spectra import Spectrum

log = logging.getLogger(__name__)

DEFAULT_MARGIN = 4.0
DEFAULT_THETA = 0.01
AMP_TOL = 0.02
KAISER_BETA = 14.0
NOISE_FLOOR = 1e-4
_BLOCK = 1 << 21  # matrix elements per log-sum block
_GROUP = 8  # factors multiplied before each log


def max_threads() -> int:
    """Worker cap from ``STEKLOV_THREADS`` (default: CPU count)."""
    env = os.environ.get("STEKLOV_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            log.warning("ignoring non-integer STEKLOV_THREADS=%r", env)
    return cpus


def count_slope(values: np.ndarray, first_index: int = 1) -> tuple[float, float]:
    """Least-squares fit ``m ~ a lambda_m + b`` over the upper half of the sequence."""
    v = np.asarray(values, dtype=float)
    m = np.arange(first_index, first_index + len(v), dtype=float)
    k = len(v) // 2
    if len(v) - k < 2:
        k = 0
    if len(v) < 2:
        raise ValueError("need at least two values to fit a counting slope")
    a, b = np.polyfit(v[k:], m[k:], 1)
    return float(a), float(b)


# --------------------------------------------------------------------------
# Truncated canonical product

@dataclass(frozen=True, eq=False)
class ProductEvaluator:
    """Truncated product over the first ``cutoff_index`` spectrum entries.

    Attributes
    ----------
    roots : ndarray
        The positive entries used (indices ``zeros + 1 .. cutoff_index``).
    zeros : int
        Number of zero entries; contributes ``sigma**(2 zeros)``.
    cutoff_index : int
        ``M``; entries beyond it are replaced by the tail correction.
    window : float
        Largest admissible evaluation point.
    tail : tuple or None
        ``(a, X)`` for the correction ``a int_X^inf log(1 - s**2/x**2) dx``.
    """

    roots: np.ndarray
    zeros: int
    cutoff_index: int
    window: float
    tail: Optional[tuple[float, float]] = None

    @classmethod
    def build(cls, S: Spectrum, window: Optional[float] = None, margin: float = DEFAULT_MARGIN,
              cutoff_index: Optional[int] = None, tail_correction: bool = True) -> "ProductEvaluator":
        v = np.asarray(S.values, dtype=float)
        z = int(S.zeros)
        pos = v[z:]
        if len(pos) < 4:
            raise ValueError("spectrum too short for a product evaluator")
        if margin < 1:
            raise ValueError("margin must be at least 1")
        if window is None:
            window = float(pos[-1]) / margin
        if window <= 0:
            raise ValueError("window must be positive")
        if cutoff_index is None:
            if pos[-1] < margin * window * (1 - 1e-12):
                raise WindowExceeded(
                    f"spectrum ends at {pos[-1]:.6g}, below margin * window = {margin * window:.6g}")
            cutoff_index = z + int(np.searchsorted(pos, margin * window, side="right"))
        cutoff_index = min(int(cutoff_index), len(v))
        used = pos[:cutoff_index - z]
        if len(used) == 0 or used[-1] <= window:
            raise WindowExceeded("cutoff leaves no factor beyond the evaluation window")
        tail = None
        if tail_correction:
            a, b = count_slope(used, first_index=z + 1)
            X = (cutoff_index - b + 0.5) / a
            if a > 0 and X > window:
                tail = (a, float(X))
        r = np.array(used)
        r.setflags(write=False)
        return cls(r, z, cutoff_index, float(window), tail)

    def log_abs_sign(self, sigma) -> tuple[np.ndarray, np.ndarray]:
        """``(log|Q|, sign Q)`` at each point; ``log|Q| = -inf`` at a root."""
        s = np.atleast_1d(np.asarray(sigma, dtype=float))
        if np.any(s < 0) or np.any(s > self.window * (1 + 1e-12)):
            raise WindowExceeded(f"evaluation outside [0, {self.window:.6g}]")
        r = self.roots
        inv2 = 1.0 / (r * r)
        g = (len(r) // _GROUP) * _GROUP
        rows = max(1, _BLOCK // len(r))
        blocks = [slice(i, i + rows) for i in range(0, len(s), rows)]

        def work(sl):
            x = s[sl][:, None]
            # (r - x)(r + x) avoids cancellation next to a root
            d = np.abs((r - x) * (r + x) * inv2)
            # one log per group of factors; group products stay far from over/underflow
            p = d[:, :g].reshape(len(d), -1, _GROUP).prod(axis=2)
            with np.errstate(divide="ignore"):
                return np.log(p).sum(axis=1) + np.log(d[:, g:]).sum(axis=1)

        nthreads = min(max_threads(), len(blocks))
        if nthreads > 1:
            with ThreadPoolExecutor(nthreads) as ex:
                parts = list(ex.map(work, blocks))
        else:
            parts = [work(b) for b in blocks]
        lg = np.concatenate(parts)
        if self.zeros:
            with np.errstate(divide="ignore"):
                lg = lg + 2 * self.zeros * np.log(s)
        if self.tail is not None:
            a, X = self.tail
            with np.errstate(divide="ignore", invalid="ignore"):
                corr = -X * np.log1p(-(s / X) ** 2) - s * np.log((X + s) / (X - s))
            lg = lg + a * corr
        below = np.searchsorted(r, s, side="left")
        sign = np.where(below % 2 == 0, 1.0, -1.0)
        return lg, sign


def eval_product(P: ProductEvaluator, sigma):
    """``Q(sigma)`` from its log-magnitude and sign (scalar or array)."""
    lg, sg = P.log_abs_sign(sigma)
    out = sg * np.exp(lg)
    return out if np.ndim(sigma) else float(out[0])


# --------------------------------------------------------------------------
# Normalising constant between two sequences

@dataclass(frozen=True)
class C0Result:
    value: float
    tail_bound: float
    branch: str  # "equal" | "more_zeros" | "fewer_zeros"
    cutoff_index: int


def _log_C0(sig: np.ndarray, lam: np.ndarray, m0: int, n0: int, M: int) -> tuple[float, float, str]:
    lo = max(m0, n0)
    logv = float(np.sum(2.0 * (np.log(sig[lo:M]) - np.log(lam[lo:M]))))
    if n0 == m0:
        return logv, 1.0, "equal"
    if n0 > m0:
        logv += float(np.sum(2.0 * np.log(sig[m0:n0])))
        return logv, (-1.0) ** (n0 - m0), "more_zeros"
    logv -= float(np.sum(2.0 * np.log(lam[n0:m0])))
    return logv, (-1.0) ** (m0 - n0), "fewer_zeros"


def compute_C0(sigma_spec: Spectrum, lambda_spec: Spectrum, M: Optional[int] = None,
               c0_tol: float = 1e-2) -> C0Result:
    """Limit of ``Q_Lambda / Q_Sigma``, truncated after ``M`` factors.

    The three branches follow the sign of ``n0 - m0`` (zero counts of the two
    sequences).  The difference between the partial products at ``M/2`` and
    ``M`` is returned as the tail estimate; a relative jump above ``c0_tol``
    raises :class:`DivergenceSuspected`.
    """
    sig = np.asarray(sigma_spec.values, dtype=float)
    lam = np.asarray(lambda_spec.values, dtype=float)
    m0, n0 = int(sigma_spec.zeros), int(lambda_spec.zeros)
    if M is None:
        M = min(len(sig), len(lam))
    M = min(int(M), len(sig), len(lam))
    if M <= max(m0, n0) + 1:
        raise ValueError("M too small for the zero counts")
    lf, sgn, branch = _log_C0(sig, lam, m0, n0, M)
    lh, _, _ = _log_C0(sig, lam, m0, n0, max(max(m0, n0) + 1, M // 2))
    if abs(lf - lh) > c0_tol:
        raise DivergenceSuspected(
            f"partial products at M/2 and M differ by a factor exp({lf - lh:.3g})")
    val = sgn * math.exp(lf)
    return C0Result(val, abs(val - sgn * math.exp(lh)), branch, M)


# --------------------------------------------------------------------------
# Mean transform

def kaiser_weight(x: np.ndarray, beta: float = KAISER_BETA) -> np.ndarray:
    """Continuous Kaiser window ``I0(beta sqrt(1 - (2x - 1)**2))`` on [0, 1]."""
    x = np.asarray(x, dtype=float)
    u = np.clip(1.0 - (2.0 * x - 1.0) ** 2, 0.0, None)
    return np.where((x >= 0) & (x <= 1), i0(beta * np.sqrt(u)), 0.0)


@dataclass(frozen=True, eq=False)
class MeanTransform:
    """Samples of ``A(z)`` on a uniform grid plus what is needed to evaluate it anywhere."""

    z_grid: np.ndarray
    values: np.ndarray  # complex
    integration_length: float
    s: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)  # normalised window times Q on s

    @property
    def dz(self) -> float:
        return float(self.z_grid[1] - self.z_grid[0]) if len(self.z_grid) > 1 else math.nan

    def at(self, z) -> np.ndarray:
        """Direct evaluation of the weighted mean at arbitrary ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.array([np.sum(self.g * np.exp(-1j * self.s * zi)) for zi in z])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "re_A"])
        for z, a in zip(self.z_grid, self.values):
            w.writerow([repr(float(z)), repr(float(a.real))])
        return buf.getvalue()


def mean_transform(P: ProductEvaluator, z_min: float, z_max: float, dz: Optional[float] = None,
                   T: Optional[float] = None, quad_step: Optional[float] = None) -> MeanTransform:
    """Weighted mean ``A(z) ~ M[exp(-i s z) Q(s)]`` over ``s in [0, T]``.

    Parameters
    ----------
    P : ProductEvaluator
    z_min, z_max : float
        Frequency range to sample.
    dz : float, optional
        Requested grid step; defaults to ``pi / (2 T)``.  The FFT grid used
        has step at most ``dz``.
    T : float, optional
        Averaging length, at most ``P.window`` (the default).
    quad_step : float, optional
        Sampling step in ``s``; at most ``pi / (3 z_max)``, which keeps aliases
        of content in ``|z| <= z_max`` outside the sampled range.

    Raises
    ------
    ResolutionTooCoarse
        If ``2 pi / T > 4 dz``: the averaging length cannot resolve
        frequencies as close as the requested grid suggests.
    """
    if T is None:
        T = P.window
    if T > P.window * (1 + 1e-12):
        raise WindowExceeded(f"T = {T:.6g} exceeds the product window {P.window:.6g}")
    if dz is None:
        dz = math.pi / (2.0 * T)
    if 2.0 * math.pi / T > 4.0 * dz * (1 + 1e-12):
        raise ResolutionTooCoarse(f"2 pi / T = {2 * math.pi / T:.4g} exceeds 4 dz = {4 * dz:.4g}")
    if z_max <= z_min or z_max <= 0:
        raise ValueError("need z_max > max(z_min, 0)")
    hmax = math.pi / (3.0 * z_max)
    h = hmax if quad_step is None else min(quad_step, hmax)
    steps = int(math.ceil(T / h))
    h = T / steps
    s = np.arange(steps + 1) * h
    s[-1] = T
    w = kaiser_weight(s / T)
    w[0] *= 0.5  # trapezoid end weights
    w[-1] *= 0.5
    Q = eval_product(P, s)
    g = w * Q / np.sum(w)

    # A(2 pi k / (N h)) is the k-th DFT coefficient of the samples on i*h
    N = sfft.next_fast_len(max(int(math.ceil(2.0 * math.pi / (dz * h))), len(s)))
    buf = np.zeros(N)
    buf[:len(s)] = g
    spec = sfft.fft(buf)
    step = 2.0 * math.pi / (N * h)
    k0 = max(0, int(math.ceil(z_min / step - 1e-9)))
    k1 = int(math.floor(z_max / step + 1e-9))
    ks = np.arange(k0, k1 + 1)
    return MeanTransform(ks * step, spec[ks], float(T), s, g)


# --------------------------------------------------------------------------
# Recovery pipeline

@dataclass(frozen=True)
class RecoveryOpts:
    window: Optional[float] = None
    margin: float = DEFAULT_MARGIN
    theta: float = DEFAULT_THETA
    dz: Optional[float] = None
    T: Optional[float] = None
    tail_correction: bool = True
    ambiguity_band: float = 0.5  # local maxima in [band*theta, theta) are ambiguous


@dataclass(frozen=True, eq=False)
class Recovery:
    charpoly: CharPoly
    transform: MeanTransform
    L_estimate: float
    peaks: np.ndarray
    peak_values: np.ndarray  # complex A at the refined peaks
    noise: float
    C1: float

    @property
    def min_gap(self) -> float:
        f = np.concatenate([[0.0], self.charpoly.freqs])
        return float(np.min(np.diff(f)))

    def suggested_tolerances(self) -> tuple[float, float]:
        """``(tol_freq, tol_one)`` for geometry recovery from this estimate."""
        tol_freq = self.min_gap / 4.0
        rmin = float(np.min(np.abs(self.charpoly.amps)))
        noise = max(self.noise, NOISE_FLOOR)
        tol_one = float(np.clip(3.0 * noise / rmin, 1e-6, 0.1))
        return tol_freq, tol_one


def _refine_peak(MT: MeanTransform, k: int) -> float:
    z, a = MT.z_grid, np.abs(MT.values)
    dz = MT.dz
    z0 = z[k]
    if 0 < k < len(z) - 1:
        den = a[k - 1] - 2 * a[k] + a[k + 1]
        if den < 0:
            z0 = z[k] + 0.5 * dz * (a[k - 1] - a[k + 1]) / den
    lo, hi = max(z[k] - dz, 0.0), z[k] + dz
    z0 = min(max(z0, lo), hi)
    res = minimize_scalar(lambda x: -abs(MT.at(x)[0]), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, z0)})
    return float(res.x) if -res.fun >= abs(MT.at(z0)[0]) else float(z0)


def recover_charpoly_detailed(S: Spectrum, opts: RecoveryOpts = RecoveryOpts()) -> Recovery:
    """Full recovery: product, mean transform, peak picking, normalisation."""
    v = np.asarray(S.values, dtype=float)
    pos = v[S.zeros:]
    a, _ = count_slope(pos, first_index=S.zeros + 1)
    if not a > 0:
        raise ValueError("spectrum does not grow linearly")
    L_est = math.pi * a
    P = ProductEvaluator.build(S, opts.window, opts.margin, tail_correction=opts.tail_correction)
    T = P.window if opts.T is None else opts.T
    z_max = 1.25 * L_est
    MT = mean_transform(P, 0.0, z_max, opts.dz, T)

    mag = np.abs(MT.values)
    interior = np.arange(1, len(mag) - 1)
    is_max = (mag[interior] > mag[interior - 1]) & (mag[interior] >= mag[interior + 1])
    cand = interior[is_max]
    if cand.size == 0:
        raise FrequencyCountNotPow2("no frequency peaks found")
    top = float(np.max(mag[cand]))
    strong = cand[mag[cand] >= opts.theta * top]
    weak = cand[(mag[cand] < opts.theta * top) & (mag[cand] >= opts.ambiguity_band * opts.theta * top)]
    if weak.size:
        raise ThresholdAmbiguous(
            f"{weak.size} peak(s) within a factor {opts.ambiguity_band} of the threshold, "
            f"e.g. at z = {MT.z_grid[weak[0]]:.6g}")
    res_cell = 2.0 * math.pi / T
    peaks = np.array([_refine_peak(MT, int(k)) for k in strong])
    order = np.argsort(peaks)
    peaks = peaks[order]
    if np.any(np.diff(peaks) < res_cell):
        raise ThresholdAmbiguous("two peaks within one resolution cell 2 pi / T")
    count = len(peaks)
    if count & (count - 1):
        raise FrequencyCountNotPow2(f"{count} frequencies detected, not a power of two")

    Av = MT.at(peaks)
    A0 = MT.at(0.0)[0]
    C1 = 1.0 / (2.0 * Av[-1].real)
    amps = 2.0 * C1 * Av.real
    r0 = -C1 * A0.real
    noise = float(max(np.max(np.abs(Av.imag)), abs(A0.imag)) / abs(Av[-1].real))
    F = CharPoly.from_terms(peaks, amps, r0)
    log.debug("recovered %d frequencies, noise %.3g, T %.4g", count, noise, T)
    return Recovery(F, MT, L_est, peaks, Av, noise, C1)


def recover_charpoly(S: Spectrum, opts: RecoveryOpts = RecoveryOpts()) -> CharPoly:
    """Characteristic polynomial (top amplitude normalised to one) from a spectrum."""
    return recover_charpoly_detailed(S, opts).charpoly
