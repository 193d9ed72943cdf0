import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cube1, measures, unit_atom, values
from twoweight.decomposition import (carleson_bound, carleson_sum, check_maximum_principle, level_sets,
                                     principal_cubes, sigma_average)
from twoweight.measure import DiscreteMeasure
from twoweight.operators import OperatorParams, default_window
from twoweight.sparse import build_sparse

P11 = OperatorParams(1, 1.0)


def _two_term():
    a = unit_atom("0.1")
    w = DiscreteMeasure([["0.3"], ["0.6"]], [1, 1])
    return [cube1(0, 0), cube1(1, 0)], a, w


def test_level_sets_example():
    S, a, w = _two_term()
    d = level_sets(P11, S, cube1(0, 0), [1], a, [1], a, w)
    assert list(d.values) == [3, 1]
    assert d.omega(0) == [cube1(1, 0)]
    assert d.omega(-1) == [cube1(0, 0)]
    assert d.levels == [-1, 0, 1]
    assert d.omega(1) == [cube1(1, 0)]
    assert check_maximum_principle(d, P11, S, cube1(0, 0), [1], a, [1], a, w)


def test_zero_function_has_no_levels():
    S, a, w = _two_term()
    d = level_sets(P11, S, cube1(0, 0), [0], a, [1], a, w)
    assert d.levels == [] and list(d.cubes()) == []
    assert check_maximum_principle(d, P11, S, cube1(0, 0), [0], a, [1], a, w)


def test_check_detects_wrong_level():
    S, a, w = _two_term()
    d = level_sets(P11, S, cube1(0, 0), [1], a, [1], a, w)
    # the sum 3 over [0,1/2) does not exceed 4
    d.maximal[2] = [cube1(1, 0)]
    d.levels = [-1, 0, 1, 2]
    res = check_maximum_principle(d, P11, S, cube1(0, 0), [1], a, [1], a)
    assert not res and res.level == 2


@settings(max_examples=80, deadline=None)
@given(st.data(), st.sampled_from([1, 2]), st.sampled_from([0.5, 1.0]), st.sampled_from([0.125, 0.25, 0.5]))
def test_maximum_principle_random(data, n, alpha, delta):
    s1 = data.draw(measures(n=n, max_atoms=5))
    s2 = data.draw(measures(n=n, max_atoms=5))
    w = data.draw(measures(n=n, max_atoms=6))
    f1 = np.array(data.draw(values(len(s1))))
    f2 = np.array(data.draw(values(len(s2))))
    params = OperatorParams(n, alpha)
    window = default_window([s1, s2, w], (0,) * n, -4, 9)
    S = build_sparse(params, (0,) * n, window, f1, s1, f2, s2)
    d = level_sets(params, S, window.root, f1, s1, f2, s2, w, delta)
    res = check_maximum_principle(d, params, S, window.root, f1, s1, f2, s2, w)
    assert res, res.reason
    for chosen in d.selected.values():
        ks = [k for k, _ in chosen]
        assert len({k % 2 for k in ks}) <= 1


def test_principal_example():
    sigma = DiscreteMeasure([["1/8"], ["3/4"]], [0.01, 1.0])
    f = np.array([100.0, 0.1])
    forest = principal_cubes(f, sigma, [cube1(0, 0), cube1(1, 0)])
    assert forest.generations == [[cube1(0, 0)], [cube1(1, 0)]]
    assert forest.averages[cube1(0, 0)] == pytest.approx(1.1 / 1.01)
    assert forest.averages[cube1(1, 0)] == pytest.approx(100)
    total = carleson_sum(forest, f, sigma, 2)
    assert total == pytest.approx((1.1 / 1.01) ** 2 * 1.01 + 100)
    assert carleson_bound(f, sigma, 2) == pytest.approx(16 / 3 * (100.0 + 0.01))
    assert total <= carleson_bound(f, sigma, 2)


def test_principal_trivial():
    sigma = DiscreteMeasure([["1/8"], ["3/4"]], [0.5, 2.0])
    forest = principal_cubes([3, 3], sigma, [cube1(0, 0), cube1(1, 0), cube1(2, 0)])
    assert forest.generations == [[cube1(0, 0)]]
    assert carleson_sum(forest, [3, 3], sigma, 2) == pytest.approx(9 * 2.5)
    assert len(principal_cubes([1, 1], sigma, [])) == 0
    assert carleson_sum(principal_cubes([0, 0], sigma, [cube1(0, 0)]), [0, 0], sigma, 3) == 0
    assert sigma_average([1, 1], sigma, cube1(1, 1)) == (1.0, 2.0)


@settings(max_examples=80, deadline=None)
@given(st.data(), st.sampled_from([1.5, 2.0, 3.0]))
def test_carleson_and_minimal_ancestor(data, p):
    sigma = data.draw(measures(n=1, max_atoms=8))
    f = np.array(data.draw(values(len(sigma))))
    forest_cubes = data.draw(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 63)), max_size=30))
    cubes = {cube1(k, m % 2 ** k) for k, m in forest_cubes}
    forest = principal_cubes(f, sigma, cubes)
    assert carleson_sum(forest, f, sigma, p) <= carleson_bound(f, sigma, p) * (1 + 1e-12)
    for Q in cubes:
        assert forest.averages[Q] <= 4 * forest.averages[forest.principal_of[Q]]
