from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from twoweight.geometry import DyadicCube
from twoweight.measure import DiscreteMeasure


def unit_atom(x, mass=1.0):
    return DiscreteMeasure([[x]], [mass])


def cube1(k, m, flag=0):
    return DyadicCube(k, (m,), (flag,))


@st.composite
def measures(draw, n=1, min_atoms=1, max_atoms=6, denominator=96):
    """Random atomic measure on a rational lattice inside [0, 1)^n."""
    count = draw(st.integers(min_atoms, max_atoms))
    coords = st.tuples(*[st.integers(0, denominator - 1)] * n)
    pts = draw(st.lists(coords, min_size=count, max_size=count, unique=True))
    masses = draw(st.lists(st.floats(0.01, 100.0), min_size=count, max_size=count))
    return DiscreteMeasure([[Fraction(c, denominator) for c in p] for p in pts], masses, n=n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# function values; subnormals would underflow under powers
VALUES = st.one_of(st.just(0.0), st.floats(1e-6, 1e3))


def values(n):
    return st.lists(VALUES, min_size=n, max_size=n)


# acceptance criterion -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
