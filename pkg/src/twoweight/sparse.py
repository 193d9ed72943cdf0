"""Sparse families: construction from the dyadic operator and sparsity checks.

A cube ``P`` is selected when it is maximal (inside its window) with product
average ``A(P) > c * a**k`` for some integer ``k``, where
``A(Q) = prod_i |Q|^-1 int_Q f_i dsigma_i`` and ``a = 4**(n+1)``.

Two threshold scales are offered.  The default normalizes ``c`` per top
window cube ``T`` to ``A(T) / 4**n``; then ``T`` itself sits at level 0 with
room to spare and the family is exactly 1/2-sparse.  ``normalize=False``
uses ``c = 1`` and admits every top cube with a positive average, which can
break sparsity at the top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from ._index import CubeIndex
from .geometry import DyadicCube, Shift
from .measure import DiscreteMeasure, _check
from .operators import OperatorParams, TruncationWindow


def stopping_base(n: int) -> int:
    """a = 2^(2(n+1))."""
    return 4 ** (n + 1)


@dataclass(frozen=True)
class SparseFamily:
    """A finite set of cubes of one grid.

    ``thresholds`` maps each built cube to the level ``c * a**k`` at which it
    was selected; it is empty for families given by hand.
    """

    cubes: tuple[DyadicCube, ...]
    shift: Shift
    thresholds: dict = field(default_factory=dict, compare=False, repr=False)
    tops: frozenset = field(default_factory=frozenset, compare=False, repr=False)
    normalized: bool = field(default=True, compare=False)

    def __post_init__(self):
        cubes = tuple(sorted(set(self.cubes)))
        if any(tuple(c.shift) != tuple(self.shift) for c in cubes):
            raise ValueError("a sparse family lives in a single grid")
        object.__setattr__(self, "cubes", cubes)
        object.__setattr__(self, "shift", tuple(self.shift))

    @classmethod
    def of(cls, cubes: Iterable[DyadicCube], shift: Shift | None = None) -> "SparseFamily":
        cubes = list(cubes)
        if shift is None:
            if not cubes:
                raise ValueError("the grid of an empty family must be given")
            shift = cubes[0].shift
        return cls(tuple(cubes), shift)

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self) -> Iterator[DyadicCube]:
        return iter(self.cubes)

    def __contains__(self, cube) -> bool:
        return cube in set(self.cubes)

    def within(self, root: DyadicCube | None) -> "SparseFamily":
        """The subfamily S(R) of cubes contained in ``root``."""
        if root is None:
            return self
        keep = tuple(c for c in self.cubes if c.k >= root.k and c.ancestor(root.k) == root)
        return SparseFamily(keep, self.shift, {c: self.thresholds[c] for c in keep if c in self.thresholds},
                            frozenset(c for c in self.tops if c in keep), self.normalized)


def domination_constant(params: OperatorParams, normalize: bool = True) -> float:
    """C with I^D <= C * I^S pointwise for families from :func:`build_sparse`.

    Grouping the cubes of one selection level under their stopping cube P
    gives ``a**(k+1) |P|^(alpha/n) / (1 - 2^-alpha)``.  A non-top cube is
    selected at one level only (a child's average is at most ``4**n`` times its
    parent's, and ``4**n < a``), so normalized families get ``a / (1 - 2^-alpha)``.
    Raw top cubes collect a geometric series of levels, adding ``a / (a - 1)``.
    """
    a = stopping_base(params.n)
    base = a / (1.0 - 2.0 ** (-params.alpha))
    return base if normalize else base * a / (a - 1)


def product_averages(index: CubeIndex, f1, sigma1: DiscreteMeasure, f2, sigma2: DiscreteMeasure) -> np.ndarray:
    """A(Q) for every indexed cube; sets 0 and 1 of the index must be sigma1, sigma2."""
    F1 = index.node_sum(0, f1 * sigma1.masses)
    F2 = index.node_sum(1, f2 * sigma2.masses)
    return F1 * F2 / np.exp2(2 * index.node_logvol)


def _levels(ratio: np.ndarray, a: float) -> np.ndarray:
    """Largest integer k with a**k < ratio (ratio > 0)."""
    k = np.floor(np.log(ratio) / math.log(a))
    k = np.where(a ** k >= ratio, k - 1, k)
    k = np.where(a ** (k + 1) < ratio, k + 1, k)
    return k


def build_sparse(params: OperatorParams, shift: Shift, window: TruncationWindow, f1, sigma1: DiscreteMeasure,
                 f2, sigma2: DiscreteMeasure, normalize: bool = True) -> SparseFamily:
    """Stopping cubes of the product average inside ``window``.

    The construction is deterministic: membership depends only on each cube's
    average and the largest average among its window ancestors.
    """
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    shift = tuple(shift)
    if window.root is not None and tuple(window.root.shift) != shift:
        raise ValueError("window root is not a cube of the requested grid")
    empty = SparseFamily((), shift, normalized=normalize)
    if not len(sigma1) or not len(sigma2):
        return empty
    idx = CubeIndex(shift, window.k_top, window.k_max, [sigma1.points, sigma2.points])
    A = product_averages(idx, f1, sigma1, f2, sigma2)
    if not np.all(np.isfinite(A)):
        raise ValueError("product average is infinite on some window cube")
    inside = idx.within(window.root, window.k_min, window.k_max)
    A = np.where(inside, A, 0.0)

    # largest ancestor average and the top window cube of every node
    top_level = window.k_top - idx.k_lo
    M = np.zeros(idx.size)
    top = np.arange(idx.size)
    for j in range(top_level + 1, idx.levels):
        nodes = np.nonzero(idx.node_level == j)[0]
        par = idx.parent[nodes]
        M[nodes] = np.maximum(M[par], A[par])
        top[nodes] = top[par]
    is_top = idx.node_level == top_level

    a = float(stopping_base(params.n))
    c = A[top] / 4.0 ** params.n if normalize else np.ones(idx.size)
    pos = A > 0
    k = np.zeros(idx.size)
    k[pos] = _levels(A[pos] / c[pos], a)
    thr = c * a ** k
    if normalize:
        # the top cube sits exactly at level 0: A(T) = 4^n c > c
        k = np.where(is_top, 0.0, k)
        thr = np.where(is_top, c, thr)
    chosen = pos & (is_top | (thr >= M))

    nodes = np.nonzero(chosen)[0]
    cubes = idx.cubes(nodes)
    thresholds = {cube: float(thr[i]) for cube, i in zip(cubes, nodes)}
    tops = frozenset(cube for cube, i in zip(cubes, nodes) if is_top[i])
    return SparseFamily(tuple(cubes), shift, thresholds, tops, normalize)


def _nearest_strict_ancestor(cube: DyadicCube, members: set, k_top: int) -> DyadicCube | None:
    c = cube
    while c.k > k_top:
        c = c.parent()
        if c in members:
            return c
    return None


def sparse_children(S) -> dict:
    """Map each cube of ``S`` to its maximal strict descendants in ``S``."""
    cubes = list(getattr(S, "cubes", S))
    members = set(cubes)
    out: dict = {c: [] for c in cubes}
    if not cubes:
        return out
    k_top = min(c.k for c in cubes)
    for c in cubes:
        up = _nearest_strict_ancestor(c, members, k_top)
        if up is not None:
            out[up].append(c)
    return out


def sparsity_ratios(S) -> dict:
    """|union of strict S-descendants of Q| / |Q| for every cube, exactly.

    Dyadic cubes of one grid are nested or disjoint, so the union is the
    disjoint union of the maximal strict descendants.
    """
    ratios = {}
    for Q, kids in sparse_children(S).items():
        n = len(Q.shift)
        ratios[Q] = sum((Fraction(1, 2 ** (n * (c.k - Q.k))) for c in kids), Fraction(0))
    return ratios


def verify_sparsity(S) -> tuple[bool, Fraction]:
    """(every ratio <= 1/2, worst ratio); an empty family gives (True, 0)."""
    ratios = sparsity_ratios(S)
    worst = max(ratios.values(), default=Fraction(0))
    return worst <= Fraction(1, 2), worst


def worst_cube(S) -> DyadicCube | None:
    ratios = sparsity_ratios(S)
    if not ratios:
        return None
    return max(sorted(ratios), key=lambda c: ratios[c])


@dataclass(frozen=True)
class MaximalityIssue:
    cube: DyadicCube
    reason: str
    value: float
    bound: float


def check_maximality(params: OperatorParams, family: SparseFamily, window: TruncationWindow, f1,
                     sigma1: DiscreteMeasure, f2, sigma2: DiscreteMeasure) -> list[MaximalityIssue]:
    """Stopping-level consistency of a built family.

    For a cube P selected at level ``t = c a^k``: ``A(P) > t``; if ``P`` is not
    a top window cube its parent has ``A <= t``, hence ``A(P) <= 4^n t``.
    Returns the violations (empty when consistent).
    """
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    if not family.cubes:
        return []
    idx = CubeIndex(family.shift, window.k_top, window.k_max, [sigma1.points, sigma2.points])
    A = product_averages(idx, f1, sigma1, f2, sigma2)
    grow = 4.0 ** params.n
    issues = []
    for P in family.cubes:
        t = family.thresholds.get(P)
        if t is None:
            continue
        node = idx.node_of(P)
        aP = float(A[node]) if node >= 0 else 0.0
        if not aP > t:
            issues.append(MaximalityIssue(P, "average not above its level", aP, t))
        if P in family.tops:
            if family.normalized and aP > grow * t:
                issues.append(MaximalityIssue(P, "top average above 4^n times its level", aP, grow * t))
            continue
        parent = idx.node_of(P.parent())
        aR = float(A[parent]) if parent >= 0 else 0.0
        if aR > t:
            issues.append(MaximalityIssue(P, "parent average above the level", aR, t))
        if aP > grow * t:
            issues.append(MaximalityIssue(P, "average above 4^n times its level", aP, grow * t))
    return issues
