from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoweight.geometry import (AxisCube, DyadicCube, all_shifts, children, contains, covering_cube, cube_at,
                                is_ancestor, iter_cubes, make_shift, realize)


def box(lo, side):
    return AxisCube.from_values([lo], side)


def test_shift_values_are_exact():
    shifts = all_shifts(2)
    assert len(shifts) == 4 and len(set(shifts)) == 4
    assert make_shift([0, F(1, 3)]) == (0, 1)
    with pytest.raises(ValueError):
        make_shift([0.5])


@pytest.mark.parametrize("k,m,t,lo,hi", [
    (0, 0, 0, F(0), F(1)),
    (0, 0, 1, F(1, 3), F(4, 3)),
    (1, 0, 1, F(-1, 6), F(1, 3)),
])
def test_realize_examples(k, m, t, lo, hi):
    q = realize(DyadicCube(k, (m,), (t,)))
    assert q.corner == (lo,) and q.upper == (hi,)


def test_children_examples():
    kids = children(DyadicCube(0, (0,), (0,)))
    assert [str(c) for c in kids] == ["[0,1/2)", "[1/2,1)"]
    shifted = children(DyadicCube(0, (0,), (1,)))
    assert [c.m for c in shifted] == [(1,), (2,)]
    assert [str(c) for c in shifted] == ["[1/3,5/6)", "[5/6,4/3)"]
    q = DyadicCube(3, (2, -1), (1, 0))
    quad = children(q)
    assert len(quad) == 4
    assert sum(c.volume for c in quad) == q.volume


def test_contains_examples():
    assert contains(DyadicCube(0, (0,), (0,)), [0])
    assert not contains(DyadicCube(0, (0,), (0,)), [1])
    assert contains(DyadicCube(0, (0,), (1,)), [F(1, 3)])


def test_covering_examples():
    # smallest admissible side first
    shift, cube = covering_cube(box("0.4", "0.2"))
    assert cube.side == F(1, 2) and realize(cube).contains_cube(box("0.4", "0.2"))
    # the scale range of the covering argument reproduces the hand-worked cubes
    assert str(covering_cube(box("0.4", "0.2"), proof_scale=True)[1]) == "[0,1)"
    s, c = covering_cube(box("0.9", "0.2"), proof_scale=True)
    assert s == (1,) and str(c) == "[1/3,4/3)"
    s, c = covering_cube(box(0, 1))
    assert s == (0,) and str(c) == "[0,1)"


coords = st.fractions(min_value=-4, max_value=4, max_denominator=3 * 2 ** 7)


@settings(max_examples=200, deadline=None)
@given(st.lists(coords, min_size=1, max_size=2), st.integers(-4, 8), st.sampled_from([0, 1]))
def test_point_in_exactly_one_cube(x, k, flag):
    shift = (flag,) * len(x)
    cube = cube_at(x, k, shift)
    assert realize(cube).contains(x)
    for nb in ((cube.m[0] - 1,) + cube.m[1:], (cube.m[0] + 1,) + cube.m[1:]):
        assert not contains(DyadicCube(k, nb, shift), x)


@settings(max_examples=200, deadline=None)
@given(st.lists(coords, min_size=2, max_size=2), st.integers(-3, 6), st.integers(0, 4), st.sampled_from([0, 1]))
def test_parent_contains_child(x, k, depth, flag):
    shift = (flag, 1 - flag)
    inner = cube_at(x, k + depth, shift)
    outer = cube_at(x, k, shift)
    assert inner.ancestor(k) == outer
    assert realize(outer).contains_cube(realize(inner))
    assert is_ancestor(outer, inner)
    assert inner in children(inner.parent())


@settings(max_examples=200, deadline=None)
@given(coords, coords, st.integers(-2, 6), st.integers(-2, 6), st.sampled_from([0, 1]))
def test_nested_or_disjoint(x, y, k1, k2, flag):
    a, b = cube_at([x], k1, (flag,)), cube_at([y], k2, (flag,))
    ra, rb = realize(a), realize(b)
    lo, hi = max(ra.corner[0], rb.corner[0]), min(ra.upper[0], rb.upper[0])
    if lo < hi:
        assert ra.contains_cube(rb) or rb.contains_cube(ra)


@settings(max_examples=300, deadline=None)
@given(st.lists(coords, min_size=1, max_size=2), st.fractions(min_value=F(1, 500), max_value=3))
def test_covering_ratio(corner, side):
    Q = AxisCube(tuple(corner), side)
    for proof in (False, True):
        shift, cube = covering_cube(Q, proof_scale=proof)
        assert realize(cube).contains_cube(Q)
        assert Q.side <= cube.side <= 6 * Q.side


def test_iter_cubes_tiles_box():
    cubes = list(iter_cubes(2, (1,), box(0, 1)))
    total = sum(realize(c).volume for c in cubes)
    assert total >= 1
    assert all(c.k == 2 for c in cubes)
