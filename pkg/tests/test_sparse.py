from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cube1, measures, unit_atom, values
from twoweight.geometry import all_shifts
from twoweight.operators import OperatorParams, TruncationWindow, default_window, eval_dyadic, eval_sparse
from twoweight.sparse import (SparseFamily, build_sparse, check_maximality, domination_constant, stopping_base,
                              verify_sparsity, worst_cube)

P11 = OperatorParams(1, 1.0)


def test_stopping_base():
    assert stopping_base(1) == 16
    assert stopping_base(2) == 64


def test_verify_examples():
    S = [cube1(0, 0), cube1(1, 0), cube1(1, 1)]
    assert verify_sparsity(S) == (False, Fraction(1))
    assert worst_cube(S) == cube1(0, 0)
    assert verify_sparsity([cube1(0, 0), cube1(1, 0)]) == (True, Fraction(1, 2))
    assert verify_sparsity([]) == (True, Fraction(0))


def test_raw_chain_trace():
    # averages 4^j on [0, 2^-j); base 16 stops at j = 0, 1, 3
    s0 = unit_atom(0)
    S = build_sparse(P11, (0,), TruncationWindow(0, 3), [1], s0, [1], s0, normalize=False)
    assert [str(c) for c in S] == ["[0,1)", "[0,1/2)", "[0,1/8)"]
    assert verify_sparsity(S) == (True, Fraction(1, 2))


def test_normalized_chain_trace():
    s0 = unit_atom(0)
    S = build_sparse(P11, (0,), TruncationWindow(0, 3), [1], s0, [1], s0)
    assert [str(c) for c in S] == ["[0,1)", "[0,1/4)"]
    assert verify_sparsity(S) == (True, Fraction(1, 4))


def test_trivial_families():
    s0 = unit_atom("1/3")
    assert len(build_sparse(P11, (0,), TruncationWindow(0, 3), [0], s0, [1], s0)) == 0
    one = TruncationWindow(2, 2)
    assert list(build_sparse(P11, (0,), one, [1], s0, [1], s0)) == [cube1(2, 1)]
    assert len(build_sparse(P11, (0,), one, [1], s0, [1], unit_atom("2/3"))) == 0


def test_family_container():
    S = SparseFamily.of([cube1(1, 0), cube1(0, 0), cube1(1, 0)])
    assert len(S) == 2 and S.cubes[0] == cube1(0, 0)
    assert cube1(1, 0) in S
    assert list(S.within(cube1(1, 1))) == []
    with pytest.raises(ValueError):
        SparseFamily.of([cube1(0, 0), cube1(0, 0, 1)])


def test_domination_constants():
    p = OperatorParams(1, 1.0)
    assert domination_constant(p) == pytest.approx(16 / 0.5)
    assert domination_constant(p, normalize=False) == pytest.approx(256 / (15 * 0.5))


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from([1, 2]), st.sampled_from([0.5, 1.0]), st.booleans())
def test_built_families_sparse_and_dominating(data, n, alpha, normalize):
    s1 = data.draw(measures(n=n, max_atoms=5))
    s2 = data.draw(measures(n=n, max_atoms=5))
    w = data.draw(measures(n=n, max_atoms=5))
    f1 = np.array(data.draw(values(len(s1))))
    f2 = np.array(data.draw(values(len(s2))))
    shift = data.draw(st.sampled_from(all_shifts(n)))
    params = OperatorParams(n, alpha)
    window = default_window([s1, s2, w], shift, -4, 9)
    S = build_sparse(params, shift, window, f1, s1, f2, s2, normalize=normalize)
    ok, worst = verify_sparsity(S)
    if normalize:
        assert ok, worst
    assert check_maximality(params, S, window, f1, s1, f2, s2) == []
    D = eval_dyadic(params, shift, window, f1, s1, f2, s2, w)
    sp = eval_sparse(params, S, f1, s1, f2, s2, w)
    C = domination_constant(params, normalize)
    assert np.all(D <= C * sp * (1 + 1e-9) + 1e-300)
