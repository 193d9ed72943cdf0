import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cube1, measures, unit_atom, values
from twoweight.geometry import DyadicCube, all_shifts
from twoweight.measure import DiscreteMeasure
from twoweight.operators import (OperatorParams, TruncationWindow, default_window, eval_dyadic, eval_kernel,
                                 eval_sparse, pointwise_lower_constant, pointwise_upper_constant)

P11 = OperatorParams(1, 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        OperatorParams(1, 2.0)
    with pytest.raises(ValueError):
        OperatorParams(2, 0.0)
    with pytest.raises(ValueError):
        TruncationWindow(3, 2)


def test_kernel_examples():
    s0 = unit_atom(0)
    assert eval_kernel(P11, [1], s0, [1], s0, [["3/4"]])[0] == pytest.approx(2 / 3)
    assert eval_kernel(P11, [1], s0, [1], unit_atom(1), [["1/2"]])[0] == pytest.approx(1)
    assert eval_kernel(P11, [1], s0, [1], s0, [[0]])[0] == math.inf
    # a zero numerator on the diagonal is not singular
    assert eval_kernel(P11, [0], s0, [1], s0, [[0]])[0] == 0


def test_dyadic_examples():
    s0 = unit_atom(0)
    x = [["3/4"]]
    assert eval_dyadic(P11, (0,), TruncationWindow(-3, 0), [1], s0, [1], s0, x)[0] == pytest.approx(15 / 8)
    values = [eval_dyadic(P11, (0,), TruncationWindow(-K, 0), [1], s0, [1], s0, x)[0] for K in (5, 20, 40)]
    assert all(abs(2 - v) <= 2.0 ** (1 - K) * 1.0001 for v, K in zip(values, (5, 20, 40)))
    assert eval_dyadic(P11, (0,), TruncationWindow(-3, 0), [1], s0, [1], s0, [[100]])[0] == 0


def test_sparse_examples():
    a = unit_atom("0.1")
    S = [cube1(0, 0), cube1(1, 0)]
    assert list(eval_sparse(P11, S, [1], a, [1], a, [["0.3"], ["0.6"]])) == [3, 1]
    assert list(eval_sparse(P11, [], [1], a, [1], a, [["0.3"]])) == [0]
    assert list(eval_sparse(P11, S, [1], a, [1], a, [["0.3"]], root=cube1(1, 0))) == [2]


def test_default_window_root():
    mu = DiscreteMeasure([["1/8"], ["3/8"]], [1, 1])
    win = default_window([mu], (0,))
    assert str(win.root) == "[0,1/2)"


def _instance(data, n):
    s1 = data.draw(measures(n=n, max_atoms=5))
    s2 = data.draw(measures(n=n, max_atoms=5))
    w = data.draw(measures(n=n, max_atoms=5))
    f1 = np.array(data.draw(values(len(s1))))
    f2 = np.array(data.draw(values(len(s2))))
    return s1, s2, w, f1, f2


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from([(1, 0.5), (1, 1.0), (2, 1.0), (2, 2.0)]))
def test_slot_symmetry_and_linearity(data, na):
    params = OperatorParams(*na)
    s1, s2, w, f1, f2 = _instance(data, na[0])
    win = TruncationWindow(-2, 9)
    shift = (1,) * na[0]
    S = [DyadicCube(k, (0,) * na[0], (0,) * na[0]) for k in range(3)]
    for ev in (lambda a, b, c, d: eval_kernel(params, a, b, c, d, w),
               lambda a, b, c, d: eval_dyadic(params, shift, win, a, b, c, d, w),
               lambda a, b, c, d: eval_sparse(params, S, a, b, c, d, w)):
        assert np.array_equal(ev(f1, s1, f2, s2), ev(f2, s2, f1, s1))
        base = ev(f1, s1, f2, s2)
        assert np.allclose(ev(3.0 * f1, s1, f2, s2), 3.0 * base, rtol=1e-12, atol=0)


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from([(1, 0.5), (1, 1.0), (2, 0.5), (2, 2.0)]))
def test_pointwise_equivalence(data, na):
    params = OperatorParams(*na)
    s1, s2, w, f1, f2 = _instance(data, na[0])
    common = (set(s1.points) & set(s2.points)) & set(w.points)
    if common:
        return
    K = eval_kernel(params, f1, s1, f2, s2, w)
    win = TruncationWindow(-3, 12)
    D = [eval_dyadic(params, t, win, f1, s1, f2, s2, w) for t in all_shifts(na[0])]
    finite = np.isfinite(K)
    assert np.all(D[0][finite] <= pointwise_upper_constant(params) * K[finite] * (1 + 1e-12))
    assert np.all(K <= pointwise_lower_constant(params) * np.sum(D, axis=0) * (1 + 1e-12))


@settings(max_examples=60, deadline=None)
@given(st.data(), st.integers(-3, 2), st.integers(3, 10))
def test_window_monotone(data, k_lo, k_hi):
    s1, s2, w, f1, f2 = _instance(data, 1)
    small = eval_dyadic(P11, (0,), TruncationWindow(k_lo, k_hi), f1, s1, f2, s2, w)
    large = eval_dyadic(P11, (0,), TruncationWindow(k_lo - 2, k_hi + 3), f1, s1, f2, s2, w)
    assert np.all(large >= small)
