import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steklov_inverse.charpoly import CharPoly, PolygonSpec, build_char_poly
from steklov_inverse.errors import EmptySpectrum, MultiplicityOverflow
from steklov_inverse.roots import RootOpts, isolate_roots, safeguarded_newton
from steklov_inverse.spectra import (PerturbedSpectrum, QuasiSpectrum, find_quasi_eigenvalues,
                                     perturb_spectrum, sorted_spectrum, spectrum_from_dict,
                                     weyl_check, zero_half_multiplicity)

from conftest import random_spec

ROOT_ATOL = 1e-10
RESIDUAL_ATOL = 1e-9
DENSE_SAMPLES = 400_000


def sign_change_count(F: CharPoly, a: float, b: float) -> int:
    """Independent count of simple roots by dense sampling."""
    s = np.linspace(a, b, DENSE_SAMPLES)
    v = F(s)
    return int(np.sum(np.sign(v[:-1]) * np.sign(v[1:]) < 0))


def test_cosine_roots_exact():
    F = CharPoly.from_terms([1.0], [1.0], 0.0)
    S = find_quasi_eigenvalues(F, 40.0)
    want = (np.arange(len(S)) + 0.5) * math.pi
    assert len(S) == 13
    assert np.allclose(S.values, want, atol=ROOT_ATOL, rtol=0)
    assert S.zeros == 0


def test_shifted_double_frequency_roots():
    F = CharPoly.from_terms([2.0], [1.0], 1 / math.sqrt(2))
    S = find_quasi_eigenvalues(F, math.pi)
    assert np.allclose(S.values, [math.pi / 8, 7 * math.pi / 8], atol=ROOT_ATOL, rtol=0)


def test_double_roots_and_zero():
    # cos s - 1 vanishes to second order at every multiple of 2 pi
    F = CharPoly.from_terms([1.0], [1.0], 1.0)
    S = find_quasi_eigenvalues(F, 20.0)
    assert S.zeros == 1
    k = np.arange(1, 4) * 2 * math.pi
    assert np.allclose(S.values, np.concatenate([[0.0], np.repeat(k, 2)]), atol=1e-7, rtol=0)
    assert zero_half_multiplicity(F, 1e-10) == 1


def test_close_pair_is_resolved():
    # cos s - (1 - d) has two simple roots +-acos(1 - d) around each multiple of 2 pi
    d = 1e-6
    F = CharPoly.from_terms([1.0], [1.0], 1.0 - d)
    S = find_quasi_eigenvalues(F, 7.0, touch_tol=1e-12)
    x = math.acos(1 - d)
    assert np.allclose(S.values, [x, 2 * math.pi - x, 2 * math.pi + x], atol=1e-9, rtol=0)


def test_root_count_against_sign_changes(ex31_spec):
    F = build_char_poly(ex31_spec)
    S = find_quasi_eigenvalues(F, 50.0)
    assert len(S) == sign_change_count(F, 0.0, 50.0)
    assert np.max(np.abs(F(S.values))) <= RESIDUAL_ATOL


def test_multiplicity_overflow():
    # (1 - cos s)^2 expanded: third-order touching at multiples of 2 pi
    F = CharPoly.from_terms([1.0, 2.0], [-2.0, 0.5], -1.5)
    with pytest.raises(MultiplicityOverflow):
        find_quasi_eigenvalues(F, 10.0)


def test_newton_and_isolation_helpers():
    x = safeguarded_newton(np.cos, lambda s: -np.sin(s), np.array([1.0, 4.0]), np.array([2.0, 5.0]))
    assert np.allclose(x, [math.pi / 2, 3 * math.pi / 2], atol=1e-14)
    r, m = isolate_roots(np.sin, np.cos, 1.0, 0.5, 10.0, 0.1, 1e-12)
    assert np.allclose(r, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)
    assert list(m) == [1, 1, 1]


def test_spectrum_containers():
    S = QuasiSpectrum(np.array([0.0, 1.0, 2.0]), 1, 5.0)
    assert spectrum_from_dict(S.to_dict()).sigma_max == 5.0
    assert S.to_dict() == {"values": [0.0, 1.0, 2.0], "zero_half_mult": 1, "sigma_max": 5.0}
    P = sorted_spectrum([2.0, 0.0, 1.0])
    assert isinstance(spectrum_from_dict(P.to_dict()), PerturbedSpectrum)
    with pytest.raises(ValueError):
        QuasiSpectrum(np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        QuasiSpectrum(np.array([0.0, 1.0]), 0)
    with pytest.raises(EmptySpectrum):
        weyl_check(QuasiSpectrum(np.zeros(0)), 1.0)


def test_perturbation_is_deterministic_and_bounded(ex31_spec):
    S = find_quasi_eigenvalues(build_char_poly(ex31_spec), 30.0)
    a = perturb_spectrum(S, 0.2, 1.0, seed=5)
    b = perturb_spectrum(S, 0.2, 1.0, seed=5)
    assert np.array_equal(a.values, b.values)
    assert np.max(np.abs(a.values - S.values)) <= 0.2
    assert np.all(np.diff(a.values) >= 0)
    z = perturb_spectrum(S, 0.2, 1.0, seed=5, force_zero=True)
    assert z.zeros == 1
    with pytest.raises(ValueError):
        perturb_spectrum(S, 0.2, 0.0, seed=0)


def test_weyl_counts_simple_example():
    S = QuasiSpectrum(np.array([1.0, 2.0, 3.0]))
    w = weyl_check(S, math.pi, sigma_max=3.5)
    # N jumps by one at each integer, L sigma / pi = sigma
    assert w.deviation == pytest.approx(1.0)
    assert w.max_unit_count == 2
    assert w.count == 3


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_weyl_deviation_stays_bounded(seed, n):
    spec = random_spec(seed, n)
    F = build_char_poly(spec)
    S = find_quasi_eigenvalues(F, 300.0)
    w = weyl_check(S, spec.perimeter)
    assert w.deviation <= 2 ** (n - 1) + 1
    assert np.max(np.abs(F(S.values))) <= RESIDUAL_ATOL * max(1.0, F.scale)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.floats(0.5, 3.0))
def test_roots_scale_inversely_with_lengths(seed, n, s):
    spec = random_spec(seed, n)
    A = find_quasi_eigenvalues(build_char_poly(spec), 40.0)
    B = find_quasi_eigenvalues(build_char_poly(spec.scaled(s)), 40.0 / s)
    k = min(len(A), len(B))
    assert abs(len(A) - len(B)) <= 1  # a root may sit exactly at the window edge
    assert np.allclose(B.values[:k] * s, A.values[:k], atol=1e-8, rtol=0)


def test_zero_root_from_cancelling_constant():
    # 1 + c1 c2 - s1 s2 = 0 puts a double root at the origin
    spec = PolygonSpec.from_cosines([0.6, -0.6], [1.0, math.sqrt(2)])
    S = find_quasi_eigenvalues(build_char_poly(spec), 10.0)
    assert S.zeros == 1 and S.values[0] == 0.0
    assert RootOpts().oversample == 8.0
