import math

import numpy as np
import pytest

from steklov_inverse.charpoly import CharPoly, build_char_poly
from steklov_inverse.errors import (DivergenceSuspected, FrequencyCountNotPow2, ResolutionTooCoarse,
                                    WindowExceeded)
from steklov_inverse.pipeline import plan_sigma_max
from steklov_inverse.reconstruct import (AMP_TOL, KAISER_BETA, ProductEvaluator, RecoveryOpts,
                                         compute_C0, count_slope, eval_product, kaiser_weight,
                                         max_threads, mean_transform, recover_charpoly,
                                         recover_charpoly_detailed)
from steklov_inverse.spectra import QuasiSpectrum, find_quasi_eigenvalues, sorted_spectrum

from conftest import random_spec

PRODUCT_RTOL = 1e-10
COS_RATIO_RTOL = 1e-6
FREQ_ATOL = 1e-5


@pytest.fixture(scope="module")
def cos_spectrum():
    """Roots of cos(s) up to 400."""
    return find_quasi_eigenvalues(CharPoly.from_terms([1.0], [1.0], 0.0), 400.0)


def test_product_matches_direct_product():
    S = QuasiSpectrum(np.array([0.0, 1.0, 2.5, 3.0, 4.2, 6.0, 7.5, 9.0]), 1)
    P = ProductEvaluator.build(S, window=2.0, tail_correction=False)
    s = np.array([0.3, 1.7, 2.0])
    r = S.values[1:P.cutoff_index]
    want = s ** 2 * np.prod(1 - s[:, None] ** 2 / r[None, :] ** 2, axis=1)
    assert np.allclose(eval_product(P, s), want, rtol=PRODUCT_RTOL, atol=0)
    assert eval_product(P, 1.0) == 0.0


def test_product_reproduces_cosine_ratio(cos_spectrum):
    # Q is cos up to a constant, so ratios of Q equal ratios of cos
    P = ProductEvaluator.build(cos_spectrum)
    assert eval_product(P, 1.0) / eval_product(P, 2.0) == pytest.approx(
        math.cos(1.0) / math.cos(2.0), rel=COS_RATIO_RTOL)
    with pytest.raises(WindowExceeded):
        eval_product(P, P.window * 1.5)


def test_product_sign_alternates_across_roots(cos_spectrum):
    P = ProductEvaluator.build(cos_spectrum)
    mids = 0.5 * (cos_spectrum.values[:-1] + cos_spectrum.values[1:])
    mids = mids[mids < P.window]
    _, sg = P.log_abs_sign(mids)
    assert np.all(sg[1:] == -sg[:-1])


def test_short_spectrum_is_rejected(cos_spectrum):
    with pytest.raises(WindowExceeded):
        ProductEvaluator.build(cos_spectrum, window=150.0)
    with pytest.raises(ValueError):
        ProductEvaluator.build(QuasiSpectrum(np.array([1.0, 2.0])))


def test_count_slope_on_linear_sequence():
    v = (np.arange(1, 101) - 0.25) / 3.0
    a, b = count_slope(v)
    assert a == pytest.approx(3.0)
    assert b == pytest.approx(0.25)


def test_C0_branches():
    sig = sorted_spectrum(np.arange(1.0, 200.0))
    lam = sorted_spectrum(np.arange(1.0, 200.0) * (1 + 1e-3 / np.arange(1.0, 200.0) ** 2))
    c = compute_C0(sig, lam)
    want = np.prod(sig.values[:199] ** 2 / lam.values[:199] ** 2)
    assert c.branch == "equal" and c.value == pytest.approx(want, rel=1e-12)
    more = compute_C0(sig, sorted_spectrum(np.concatenate([[0.0], lam.values[1:]])))
    assert more.branch == "more_zeros"
    fewer = compute_C0(sorted_spectrum(np.concatenate([[0.0], sig.values[1:]])), lam)
    assert fewer.branch == "fewer_zeros"
    with pytest.raises(DivergenceSuspected):
        compute_C0(sig, sorted_spectrum(np.arange(1.0, 200.0) + 0.5))


def test_kaiser_weight_shape():
    x = np.linspace(0, 1, 101)
    w = kaiser_weight(x)
    assert np.allclose(w, w[::-1])
    assert w[50] == pytest.approx(np.i0(KAISER_BETA))
    assert w[0] == pytest.approx(1.0)
    assert kaiser_weight(np.array([-0.1, 1.1])).tolist() == [0.0, 0.0]


def test_mean_transform_peaks_at_cosine_frequency(cos_spectrum):
    P = ProductEvaluator.build(cos_spectrum)
    MT = mean_transform(P, 0.0, 2.0)
    z = MT.z_grid[np.argmax(np.abs(MT.values))]
    assert abs(z - 1.0) <= MT.dz
    assert MT.to_csv().splitlines()[0] == "z,re_A"
    with pytest.raises(ResolutionTooCoarse):
        mean_transform(P, 0.0, 2.0, dz=1e-3)


def test_recover_cosine(cos_spectrum):
    F = recover_charpoly(cos_spectrum)
    assert F.freqs == pytest.approx([1.0], abs=FREQ_ATOL)
    assert F.amps == pytest.approx([1.0])
    assert abs(F.const_term) <= 1e-5


@pytest.mark.parametrize("seed,n", [(21, 2), (22, 3)])
def test_recover_random_polynomial(seed, n):
    F = build_char_poly(random_spec(seed, n))
    S = find_quasi_eigenvalues(F, plan_sigma_max(F))
    rec = recover_charpoly_detailed(S)
    G = rec.charpoly
    assert len(G.freqs) == len(F.freqs)
    assert np.max(np.abs(G.freqs - F.freqs)) <= FREQ_ATOL
    assert np.max(np.abs(G.amps - F.amps)) <= AMP_TOL
    assert abs(G.const_term - F.const_term) <= AMP_TOL
    assert rec.L_estimate == pytest.approx(F.t_max, rel=1e-2)
    tol_freq, tol_one = rec.suggested_tolerances()
    assert 0 < tol_freq < rec.min_gap and 1e-6 <= tol_one <= 0.1
    # deterministic: identical input gives identical output
    assert np.array_equal(recover_charpoly(S).amps, G.amps)


def test_three_frequencies_are_refused():
    F = CharPoly.from_terms([1.0, 2.0, 3.0], [0.2, 0.3, 1.0], 0.1)
    S = find_quasi_eigenvalues(F, plan_sigma_max(F))
    with pytest.raises(FrequencyCountNotPow2):
        recover_charpoly(S, RecoveryOpts())


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("STEKLOV_THREADS", "1")
    assert max_threads() == 1
    monkeypatch.setenv("STEKLOV_THREADS", "many")
    assert max_threads() >= 1
