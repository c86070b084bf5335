import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steklov_inverse.charpoly import (CharPoly, PolygonSpec, build_char_poly, geometry_of_spec,
                                      loose_equivalent)
from steklov_inverse.demos import load_corpus
from steklov_inverse.errors import (AmbiguousExclusion, InvalidDiscriminant, NotPowerOfTwo,
                                    OddAdjacencyCount, SignInconsistency, WalkStuck)
from steklov_inverse.geometry import (AdjacencyData, SortedLengths, build_adjacency,
                                      count_exceptional, recover_geometry,
                                      recover_order_and_cosines, recover_small_n,
                                      recover_sorted_lengths)
from steklov_inverse.results import ExceptionalComponent, GeometryResult

from conftest import E, PI, S2, random_spec, with_exceptional

ATOL = 1e-12
PROP_TOL = 1e-9
NOISE_AMP = 1e-5

# published reference values for the worked four-sided example: R' (times 120) and D'
RP_120 = np.array([[6, -16, 15, -2], [-16, -20, -2, 15], [15, -2, 12, -16], [-2, 15, -16, -40]])
DP = np.array([[1 / 20, 1 / 16, 1 / 25, 1], [1 / 16, -1 / 6, 1, 4 / 9],
               [1 / 25, 1, 1 / 10, 1 / 4], [1, 4 / 9, 1 / 4, -1 / 3]])


def test_sorted_lengths_of_example(ex31_spec):
    SL = recover_sorted_lengths(build_char_poly(ex31_spec))
    assert np.allclose(SL.values, [S2 - 1, 1 + S2, E, PI], atol=ATOL, rtol=0)
    assert SL.total == pytest.approx(E + PI + 2 * S2, abs=ATOL)


def test_adjacency_matrices_of_example(ex31_spec):
    F = build_char_poly(ex31_spec)
    D = build_adjacency(F, recover_sorted_lengths(F))
    assert np.allclose(D.Rp * 120, RP_120, atol=1e-10, rtol=0)
    assert np.allclose(D.Dp, DP, atol=ATOL, rtol=0)
    assert count_exceptional(D) == 0


def test_order_and_cosines_of_example(ex31_spec):
    F = build_char_poly(ex31_spec)
    SL = recover_sorted_lengths(F)
    g = recover_order_and_cosines(F, SL, build_adjacency(F, SL))
    assert np.allclose(g.ordered_lengths, [S2 - 1, 1 + S2, PI, E], atol=ATOL, rtol=0)
    assert np.allclose(g.cosines, [0.25, -2 / 3, 0.5, 0.2], atol=ATOL, rtol=0)
    assert loose_equivalent(g, geometry_of_spec(ex31_spec))


def test_exceptional_example(ex32_spec):
    g = recover_geometry(build_char_poly(ex32_spec))
    assert g.K == 3
    want = GeometryResult(n=4, K=3, components=(
        ExceptionalComponent.canonical([E, PI], [0.5], "odd"),
        ExceptionalComponent((S2 - 1,), (), "odd"),
        ExceptionalComponent((S2 + 1,), (), "even")))
    assert loose_equivalent(g, want, tol=ATOL)
    assert GeometryResult.from_dict(g.to_dict()) == g


def test_commensurable_pair_is_refused():
    d = load_corpus("ex3.5-commensurable")
    for s in d["specs"]:
        F = build_char_poly(PolygonSpec.from_dict(s))
        with pytest.raises((NotPowerOfTwo, AmbiguousExclusion)):
            recover_geometry(F)


def test_equal_sided_two_gon_is_underdetermined():
    spec = PolygonSpec.from_angles([2 * PI / 7, 3 * PI / 7], [1.0, 1.0])
    g = recover_geometry(build_char_poly(spec), n_expected=2)
    assert g.underdetermined
    assert g.ordered_lengths == (1.0, 1.0)
    want = math.cos(PI ** 2 / (2 * 2 * PI / 7) + PI ** 2 / (2 * 3 * PI / 7))
    assert g.invariants["cos_angle_sum"] == pytest.approx(want, abs=ATOL)
    # without the side count the same polynomial reads as a one-gon
    assert recover_geometry(build_char_poly(spec)).n == 1


def test_small_n_closed_forms():
    one = PolygonSpec.from_cosines([-0.4], [2.0])
    g = recover_small_n(build_char_poly(one))
    assert g.ordered_lengths == (2.0,) and g.cosines[0] == pytest.approx(0.4, abs=ATOL)
    exc = recover_geometry(build_char_poly(PolygonSpec.from_cosines([1.0], [2.0])))
    assert exc.K == 1 and exc.components[0].parity == "even"
    two = PolygonSpec.from_cosines([0.3, -0.7], [1.0, S2])
    assert loose_equivalent(recover_geometry(build_char_poly(two)), geometry_of_spec(two), tol=ATOL)
    with pytest.raises(InvalidDiscriminant):
        recover_small_n(CharPoly.from_terms([1.0], [1.0], 1.5))


def test_frequency_count_must_be_power_of_two():
    with pytest.raises(NotPowerOfTwo):
        recover_geometry(CharPoly.from_terms([1.0, 2.0, 3.5], [0.2, 0.3, 1.0], 0.1))
    with pytest.raises(NotPowerOfTwo):
        recover_geometry(build_char_poly(random_spec(1, 3)), n_expected=4)


def _fake(Dp) -> tuple[SortedLengths, AdjacencyData]:
    Dp = np.asarray(Dp, dtype=float)
    n = len(Dp)
    return SortedLengths(tuple(float(k + 1) for k in range(n)), n * (n + 1) / 2), AdjacencyData(Dp, Dp)


def test_inconsistent_adjacency_errors():
    _, D = _fake([[0.1, 0.5, 1, 1], [1, 0.1, 1, 1], [1, 1, 0.1, 1], [1, 1, 1, 0.1]])
    with pytest.raises(OddAdjacencyCount):
        count_exceptional(D)

    full = np.full((4, 4), 0.5) + np.diag([0.1 - 0.5] * 4)
    SL, D = _fake(full)
    F = CharPoly.from_terms([1.0], [1.0], 0.0)
    with pytest.raises(WalkStuck):
        recover_order_and_cosines(F, SL, D, strict=True)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        try:
            recover_order_and_cosines(F, SL, D)
        except (WalkStuck, SignInconsistency):
            pass
    assert any("keeping the two smallest" in str(w.message) for w in rec)

    tri = np.full((3, 3), 0.25)
    np.fill_diagonal(tri, [0.1, 0.1, -0.1])
    SL, D = _fake(tri)
    with pytest.raises(SignInconsistency):
        recover_order_and_cosines(F, SL, D)


def test_noisy_polynomial_with_loosened_tolerances(ex31_spec):
    F = build_char_poly(ex31_spec)
    rng = np.random.default_rng(0)
    G = CharPoly.from_terms(F.freqs + rng.uniform(-1e-7, 1e-7, len(F.freqs)),
                            F.amps + rng.uniform(-NOISE_AMP, NOISE_AMP, len(F.amps)), F.const_term)
    g = recover_geometry(G, tol_freq=1e-4, tol_one=1e-2)
    assert loose_equivalent(g, geometry_of_spec(ex31_spec), tol=1e-6, cos_tol=1e-3)


# -------------------------------------------------------------------------- properties

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 6))
def test_recovery_inverts_the_forward_map(seed, n, k_exc):
    rng = np.random.default_rng(seed)
    spec = random_spec(seed, n, cos_range=(0.05, 0.99))
    spec = with_exceptional(rng, spec, min(k_exc, n) if n > 1 else 0)
    g = recover_geometry(build_char_poly(spec), n_expected=n)
    assert loose_equivalent(g, geometry_of_spec(spec), tol=PROP_TOL * spec.perimeter)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 6), st.floats(0.05, 20.0))
def test_scale_covariance(seed, n, s):
    spec = random_spec(seed, n)
    a = recover_geometry(build_char_poly(spec))
    b = recover_geometry(build_char_poly(spec.scaled(s)))
    assert np.allclose(np.array(b.ordered_lengths), s * np.array(a.ordered_lengths),
                       atol=PROP_TOL * s * spec.perimeter, rtol=0)
    assert np.allclose(a.cosines, b.cosines, atol=PROP_TOL)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 6), st.randoms(use_true_random=False))
def test_input_term_order_is_irrelevant(seed, n, shuffler):
    F = build_char_poly(random_spec(seed, n))
    idx = list(range(len(F.freqs)))
    shuffler.shuffle(idx)
    G = CharPoly.from_terms(F.freqs[idx], F.amps[idx], F.const_term)
    assert recover_sorted_lengths(G) == recover_sorted_lengths(F)
