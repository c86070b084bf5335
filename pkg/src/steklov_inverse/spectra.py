"""Quasi-eigenvalues: the non-negative roots of a characteristic polynomial."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .charpoly import CharPoly
from .errors import EmptySpectrum, MultiplicityOverflow
from .roots import RootOpts, isolate_roots

MAX_ZERO_HALF_MULT = 16


@dataclass(frozen=True, eq=False)
class QuasiSpectrum:
    """Sorted roots with multiplicity; the first ``zero_half_mult`` entries are 0.

    A root of ``F`` at the origin has even multiplicity ``2 m0`` and is
    represented by ``m0`` zeros.  ``sigma_max`` records the search window
    when known.
    """

    values: np.ndarray
    zero_half_mult: int = 0
    sigma_max: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if np.any(v < 0) or np.any(np.diff(v) < 0):
            raise ValueError("values must be non-negative and sorted")
        if int(np.sum(v == 0)) != self.zero_half_mult:
            raise ValueError("zero_half_mult must equal the number of zero entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def zeros(self) -> int:
        return self.zero_half_mult

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        d = {"values": self.values.tolist(), "zero_half_mult": int(self.zero_half_mult)}
        if self.sigma_max is not None:
            d["sigma_max"] = float(self.sigma_max)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuasiSpectrum":
        v = np.sort(np.asarray(d["values"], dtype=float))
        sm = d.get("sigma_max")
        return cls(v, int(d.get("zero_half_mult", int(np.sum(v == 0)))),
                   None if sm is None else float(sm))


@dataclass(frozen=True, eq=False)
class PerturbedSpectrum:
    """A sorted non-negative sequence with ``zero_count`` exact zeros."""

    values: np.ndarray
    zero_count: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) < 0):
            raise ValueError("values must be non-negative and sorted")
        if int(np.sum(v == 0)) != self.zero_count:
            raise ValueError("zero_count must equal the number of zero entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def zeros(self) -> int:
        return self.zero_count

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "zero_count": int(self.zero_count)}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbedSpectrum":
        v = np.sort(np.asarray(d["values"], dtype=float))
        return cls(v, int(np.sum(v == 0)))


Spectrum = Union[QuasiSpectrum, PerturbedSpectrum]


def spectrum_from_dict(d: dict) -> Spectrum:
    """Read either spectrum flavour from its JSON form."""
    if "zero_count" in d and "zero_half_mult" not in d:
        return PerturbedSpectrum.from_dict(d)
    return QuasiSpectrum.from_dict(d)


def zero_half_multiplicity(F: CharPoly, touch_tol: float) -> int:
    """Half the order of vanishing of ``F`` at 0, from even derivatives.

    ``F^(2j)(0) = (-1)^j sum_k r_k t_k^(2j)`` (minus ``r_0`` for j = 0); the
    tolerance for order ``2j`` is scaled by ``t_max^(2j)``.
    """
    t = F.freqs / F.t_max
    for j in range(MAX_ZERO_HALF_MULT + 1):
        d = float(np.sum(F.amps * t ** (2 * j))) - (F.const_term if j == 0 else 0.0)
        if abs(d) > touch_tol:
            return j
    raise MultiplicityOverflow("F vanishes to very high order at the origin")


def find_quasi_eigenvalues(F: CharPoly, sigma_max: float, opts: RootOpts = RootOpts(),
                           touch_tol: Optional[float] = None) -> QuasiSpectrum:
    """All roots of ``F`` in ``[0, sigma_max]``, multiplicities repeated.

    Parameters
    ----------
    F : CharPoly
        Polynomial with at least one frequency.
    sigma_max : float
        Right end of the search window.
    opts : RootOpts
        Grid oversampling and refinement tolerances.
    touch_tol : float, optional
        Threshold below which ``|F|`` counts as touching zero; defaults to
        ``opts.touch_tol_rel * sum |r_k|``.
    """
    if sigma_max <= 0:
        raise ValueError("sigma_max must be positive")
    if len(F.freqs) == 0:
        raise ValueError("F has no frequencies")
    if touch_tol is None:
        touch_tol = opts.touch_tol_rel * float(np.sum(np.abs(F.amps)))
    m0 = zero_half_multiplicity(F, touch_tol)

    h = math.pi / (opts.oversample * F.t_max)
    x, mult = isolate_roots(
        lambda s: F(s), lambda s: F(s, 1), F.derivative_bound(2), 0.0, float(sigma_max), h,
        touch_tol, d2f=lambda s: F(s, 2), opts=opts, skip_left_cluster=m0 > 0)
    keep = x > 0
    vals = np.concatenate([np.zeros(m0), np.repeat(x[keep], mult[keep])])
    return QuasiSpectrum(vals, m0, float(sigma_max))


@dataclass(frozen=True)
class WeylReport:
    deviation: float  # sup |N(sigma) - L sigma / pi| over the window
    max_unit_count: int  # most roots in any closed interval of length one
    L: float
    sigma_max: float
    count: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def weyl_check(S: Spectrum, L: float, sigma_max: Optional[float] = None) -> WeylReport:
    """Compare the counting function ``N(sigma) = #{sigma_m < sigma}`` with ``L sigma / pi``."""
    v = np.asarray(S.values, dtype=float)
    if v.size == 0:
        raise EmptySpectrum("cannot check an empty spectrum")
    if sigma_max is None:
        sigma_max = getattr(S, "sigma_max", None) or float(v[-1])
    v = v[v <= sigma_max]
    if v.size == 0:
        raise EmptySpectrum("no spectrum entries inside the window")
    # N jumps at each distinct value: check the left and right limits there
    u, first = np.unique(v, return_index=True)
    below = first.astype(float)
    upto = np.searchsorted(v, u, side="right").astype(float)
    w = L * u / math.pi
    dev = max(np.max(np.abs(below - w)), np.max(np.abs(upto - w)),
              abs(len(v) - L * sigma_max / math.pi))
    unit = int(np.max(np.searchsorted(v, v + 1.0, side="right") - np.arange(len(v))))
    return WeylReport(float(dev), unit, float(L), float(sigma_max), int(len(v)))


def perturb_spectrum(S: Spectrum, A: float, eps: float, seed: int,
                     force_zero: bool = False) -> PerturbedSpectrum:
    """Synthetic eigenvalues ``max(0, sigma_m + u_m A m^-eps)`` with ``|u_m| <= 1``.

    The ``u_m`` are uniform on ``[-1, 1]`` from ``numpy.random.default_rng(seed)``,
    so the output is a pure function of the arguments.  ``force_zero`` sets
    the smallest value to exactly 0, as for a genuine Steklov spectrum.
    """
    if A < 0 or eps <= 0:
        raise ValueError("need A >= 0 and eps > 0")
    sigma = np.asarray(S.values, dtype=float)
    m = np.arange(1, len(sigma) + 1, dtype=float)
    u = np.random.default_rng(seed).uniform(-1.0, 1.0, size=len(sigma))
    lam = np.maximum(0.0, sigma + u * A * m ** (-eps))
    if force_zero and lam.size:
        lam[np.argmin(lam)] = 0.0
    lam = np.sort(lam, kind="stable")
    return PerturbedSpectrum(lam, int(np.sum(lam == 0)))


def sorted_spectrum(values: Sequence[float]) -> PerturbedSpectrum:
    v = np.sort(np.asarray(values, dtype=float))
    return PerturbedSpectrum(v, int(np.sum(v == 0)))
