"""End-to-end helpers: forward build, root search, recovery, comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charpoly import CharPoly, PolygonSpec, build_char_poly, geometry_of_spec, loose_equivalent
from .geometry import recover_geometry
from .reconstruct import DEFAULT_MARGIN, Recovery, RecoveryOpts, recover_charpoly_detailed
from .results import GeometryResult
from .spectra import QuasiSpectrum, Spectrum, find_quasi_eigenvalues, perturb_spectrum, weyl_check

# a frequency gap g is resolved cleanly once g * T exceeds this (kernel main lobe ~29)
GAP_TIMES_T = 70.0
MIN_ROOTS = 2000
LENGTH_TOL_REL = 1e-3
COS_TOL = 0.02


def min_frequency_gap(F: CharPoly) -> float:
    """Smallest spacing in ``{0} U freqs`` (the constant sits at zero)."""
    f = np.concatenate([[0.0], F.freqs])
    return float(np.min(np.diff(f)))


def plan_sigma_max(F: CharPoly, margin: float = DEFAULT_MARGIN, min_roots: int = MIN_ROOTS,
                   gap_times_T: float = GAP_TIMES_T) -> float:
    """Search window long enough to resolve every frequency of ``F``."""
    L = F.t_max
    T = gap_times_T / min_frequency_gap(F)
    return max(margin * T, min_roots * math.pi / L) * 1.01


def amplitude_error(a: CharPoly, b: CharPoly) -> float:
    """Largest amplitude or constant mismatch between term-matched polynomials."""
    if len(a.freqs) != len(b.freqs):
        return math.inf
    return float(max(np.max(np.abs(a.amps - b.amps)), abs(a.const_term - b.const_term)))


@dataclass(frozen=True)
class RoundtripReport:
    spec: PolygonSpec
    charpoly: CharPoly
    spectrum_size: int
    weyl_deviation: float
    recovered: CharPoly
    geometry: GeometryResult
    equivalent: bool
    amp_error: float
    freq_error: float
    noise: float

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "charpoly": self.charpoly.to_dict(),
            "spectrum_size": self.spectrum_size,
            "weyl_deviation": self.weyl_deviation,
            "recovered_charpoly": self.recovered.to_dict(),
            "geometry": self.geometry.to_dict(),
            "loose_equivalent": self.equivalent,
            "amp_error": self.amp_error,
            "freq_error": self.freq_error,
            "noise": self.noise,
        }


def recover_from_spectrum(S: Spectrum, opts: RecoveryOpts = RecoveryOpts(),
                          n_expected: Optional[int] = None, strict: bool = False,
                          tol_freq: Optional[float] = None,
                          tol_one: Optional[float] = None) -> tuple[Recovery, GeometryResult]:
    """Spectrum to polynomial to geometry, with tolerances sized from the recovery noise."""
    rec = recover_charpoly_detailed(S, opts)
    tf, to = rec.suggested_tolerances()
    geo = recover_geometry(rec.charpoly, n_expected=n_expected,
                           tol_freq=tf if tol_freq is None else tol_freq,
                           tol_one=to if tol_one is None else tol_one, strict=strict)
    return rec, geo


def roundtrip(spec: PolygonSpec, sigma_max: Optional[float] = None,
              perturb: Optional[tuple[float, float]] = None, seed: int = 0,
              opts: RecoveryOpts = RecoveryOpts()) -> RoundtripReport:
    """Build ``F``, compute its roots, optionally perturb them, recover and compare."""
    F = build_char_poly(spec)
    if sigma_max is None:
        sigma_max = plan_sigma_max(F, opts.margin)
    S: Spectrum = find_quasi_eigenvalues(F, sigma_max)
    w = weyl_check(S, spec.perimeter)
    if perturb is not None:
        S = perturb_spectrum(S, perturb[0], perturb[1], seed)
    rec, geo = recover_from_spectrum(S, opts, n_expected=spec.n)
    G = rec.charpoly
    ok = loose_equivalent(geo, geometry_of_spec(spec), tol=LENGTH_TOL_REL * spec.perimeter,
                          cos_tol=COS_TOL)
    ferr = float(np.max(np.abs(G.freqs - F.freqs))) if len(G.freqs) == len(F.freqs) else math.inf
    return RoundtripReport(spec, F, len(S), w.deviation, G, geo, ok, amplitude_error(G, F), ferr,
                           rec.noise)


def quasi_spectrum(spec: PolygonSpec, sigma_max: float) -> QuasiSpectrum:
    return find_quasi_eigenvalues(build_char_poly(spec), sigma_max)
