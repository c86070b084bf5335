import math

import numpy as np
import pytest

from steklov_inverse.charpoly import build_char_poly
from steklov_inverse.demos import DEMOS, load_corpus, run_demo, straight_triangle
from steklov_inverse.pipeline import min_frequency_gap, plan_sigma_max, roundtrip
from steklov_inverse.spectra import find_quasi_eigenvalues

from conftest import random_spec

PERTURB = (0.2, 1.0)


def test_plan_gives_enough_roots():
    F = build_char_poly(random_spec(4, 3))
    sm = plan_sigma_max(F)
    assert F.t_max * sm / math.pi >= 2000
    assert sm >= 4 * 70 / min_frequency_gap(F)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_roundtrip_clean_and_perturbed(n):
    spec = random_spec(100 + n, n)
    clean = roundtrip(spec)
    assert clean.equivalent
    assert clean.spectrum_size >= 2000
    noisy = roundtrip(spec, perturb=PERTURB, seed=1)
    assert noisy.equivalent
    assert noisy.amp_error <= 2 * 0.02
    assert set(noisy.to_dict()) >= {"loose_equivalent", "geometry", "recovered_charpoly"}


def test_straight_triangle_sides_follow_law_of_sines():
    spec = straight_triangle([math.pi / 2, math.pi / 3, math.pi / 6], perimeter=2.0)
    # side j lies opposite angle j + 1
    assert spec.perimeter == pytest.approx(2.0)
    assert spec.lengths[2] / spec.lengths[1] == pytest.approx(math.sin(math.pi / 2) / math.sin(math.pi / 6))


@pytest.mark.parametrize("name", DEMOS)
def test_demos_reproduce_their_claims(name):
    out = run_demo(name)
    assert out["ok"], out["checks"]
    assert load_corpus(name)["description"]


def test_unknown_demo():
    with pytest.raises(KeyError):
        load_corpus("nope")


def test_generic_roots_are_simple():
    spec = random_spec(8, 3)
    S = find_quasi_eigenvalues(build_char_poly(spec), 20.0)
    assert np.all(np.diff(S.values) > 0)
