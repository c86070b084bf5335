import math

import numpy as np
import pytest

from steklov_inverse.charpoly import PolygonSpec, random_admissible_spec

S2, E, PI = math.sqrt(2.0), math.e, math.pi

# verdict lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ex31_spec():
    """The four-sided worked example with cosines (1/2, -2/3, 1/4, 1/5)."""
    return PolygonSpec.from_cosines([0.5, -2 / 3, 0.25, 0.2], [E, PI, 1 + S2, S2 - 1])


@pytest.fixture
def ex32_spec():
    """Same lengths with three exceptional vertices."""
    return PolygonSpec.from_cosines([0.5, 1.0, 1.0, -1.0], [E, PI, 1 + S2, S2 - 1])


def with_exceptional(rng: np.random.Generator, spec: PolygonSpec, k: int) -> PolygonSpec:
    """Replace ``k`` random cosines by +-1."""
    c = np.array(spec.cosines)
    idx = rng.choice(spec.n, size=k, replace=False)
    c[idx] = rng.choice([-1.0, 1.0], size=k)
    return PolygonSpec.from_cosines(c, spec.lengths)


def random_spec(seed: int, n: int, **kw) -> PolygonSpec:
    return random_admissible_spec(np.random.default_rng(seed), n, **kw)
