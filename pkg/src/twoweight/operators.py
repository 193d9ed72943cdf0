"""The bilinear fractional integral and its dyadic and sparse versions.

All evaluators return one value per evaluation atom.  Evaluation points are
given as a :class:`DiscreteMeasure` (its atoms) or as a plain sequence of
points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._index import CubeIndex
from .geometry import DyadicCube, Shift, as_point, cube_at, side_length
from .measure import DiscreteMeasure, _check


@dataclass(frozen=True)
class OperatorParams:
    n: int
    alpha: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if not 0 < self.alpha < 2 * self.n:
            raise ValueError("order alpha must satisfy 0 < alpha < 2n")

    @property
    def cube_exponent(self) -> float:
        """Exponent e with sum term |Q|^{-e} * int f1 * int f2, e = 2 - alpha/n."""
        return 2.0 - self.alpha / self.n

    def coef(self, logvol) -> np.ndarray:
        """|Q|^{-(2 - alpha/n)} from log2 |Q|."""
        return np.exp2(-self.cube_exponent * np.asarray(logvol, dtype=float))


@dataclass(frozen=True)
class TruncationWindow:
    """Admissible cube scales k_min..k_max, optionally only cubes inside ``root``."""

    k_min: int = -10
    k_max: int = 12
    root: DyadicCube | None = None

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")

    @property
    def k_top(self) -> int:
        """Coarsest admitted scale."""
        return self.k_min if self.root is None else max(self.k_min, self.root.k)

    def admits(self, cube: DyadicCube) -> bool:
        if not self.k_min <= cube.k <= self.k_max:
            return False
        if self.root is None:
            return True
        if cube.shift != self.root.shift or cube.k < self.root.k:
            return False
        return cube.ancestor(self.root.k) == self.root

    def as_dict(self) -> dict:
        root = None
        if self.root is not None:
            root = {"k": self.root.k, "m": list(self.root.m), "shift": list(self.root.shift)}
        return {"k_min": self.k_min, "k_max": self.k_max, "root": root}


def smallest_containing_cube(points: Iterable, shift: Shift, k_min: int, k_max: int) -> DyadicCube | None:
    """Finest cube of the grid with scale in [k_min, k_max] holding every point."""
    pts = [as_point(p) for p in points]
    if not pts:
        return None
    for k in range(k_max, k_min - 1, -1):
        first = cube_at(pts[0], k, shift)
        if all(cube_at(p, k, shift) == first for p in pts[1:]):
            return first
    return None


def default_window(measures: Sequence[DiscreteMeasure], shift: Shift, k_min: int = -10, k_max: int = 12) -> TruncationWindow:
    pts = [p for mu in measures for p in mu.points]
    root = smallest_containing_cube(pts, shift, k_min, k_max)
    return TruncationWindow(k_min, k_max, root)


def _points(at) -> list:
    if isinstance(at, DiscreteMeasure):
        return list(at.points)
    return [as_point(p) for p in at]


def eval_kernel(params: OperatorParams, f1, sigma1: DiscreteMeasure, f2, sigma2: DiscreteMeasure, at) -> np.ndarray:
    """sum over atom pairs of f1 f2 m1 m2 / (|x-y1| + |x-y2|)^(2n - alpha).

    A pair with x = y1 = y2 and positive numerator makes the value +inf.
    """
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    pts = _points(at)
    out = np.zeros(len(pts))
    if not pts or not len(sigma1) or not len(sigma2):
        return out
    g1 = f1 * sigma1.masses
    g2 = f2 * sigma2.masses
    # fixed slot order so that swapping the slots repeats the same float operations
    if (sigma2.points, tuple(g2)) < (sigma1.points, tuple(g1)):
        sigma1, sigma2, g1, g2 = sigma2, sigma1, g2, g1
    y1 = sigma1.float_points
    y2 = sigma2.float_points
    index1 = {p: i for i, p in enumerate(sigma1.points)}
    index2 = {p: i for i, p in enumerate(sigma2.points)}
    expo = 2 * params.n - params.alpha
    for i, x in enumerate(pts):
        a, b = index1.get(x), index2.get(x)
        if a is not None and b is not None and g1[a] > 0 and g2[b] > 0:
            out[i] = math.inf
            continue
        xf = np.array([float(c) for c in x])
        d1 = np.sqrt(((y1 - xf) ** 2).sum(axis=1))
        d2 = np.sqrt(((y2 - xf) ** 2).sum(axis=1))
        D = d1[:, None] + d2[None, :]
        with np.errstate(divide="ignore"):
            K = np.where(D > 0, D, np.inf) ** (-expo)
        if a is not None and b is not None:
            K[a, b] = 0.0  # zero numerator on the diagonal
        out[i] = float(g1 @ K @ g2)
    return out


def _window_index(window: TruncationWindow, shift: Shift, sets) -> tuple[CubeIndex, np.ndarray]:
    k_lo = window.k_top
    idx = CubeIndex(shift, k_lo, window.k_max, sets)
    mask = idx.within(window.root, window.k_min, window.k_max)
    return idx, mask


def eval_dyadic(params: OperatorParams, shift: Shift, window: TruncationWindow, f1, sigma1: DiscreteMeasure,
                f2, sigma2: DiscreteMeasure, at) -> np.ndarray:
    """Truncated dyadic operator: sum over window cubes Q containing x of |Q|^{-(2-a/n)} int_Q f1 int_Q f2."""
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    pts = _points(at)
    if window.root is not None and tuple(window.root.shift) != tuple(shift):
        raise ValueError("window root is not a cube of the requested grid")
    idx, mask = _window_index(window, shift, [sigma1.points, sigma2.points, pts])
    F1 = idx.node_sum(0, f1 * sigma1.masses)
    F2 = idx.node_sum(1, f2 * sigma2.masses)
    term = np.where(mask, params.coef(idx.node_logvol) * (F1 * F2), 0.0)
    return idx.chain_sum(2, term) if pts else np.zeros(0)


def _family(S) -> tuple[list[DyadicCube], Shift | None]:
    cubes = list(getattr(S, "cubes", S))
    shift = getattr(S, "shift", None)
    if shift is None and cubes:
        shift = cubes[0].shift
    if any(c.shift != shift for c in cubes):
        raise ValueError("a sparse family lives in a single grid")
    return cubes, shift


def sparse_index(S, sets, extra_k: Sequence[int] = ()) -> tuple[CubeIndex, np.ndarray]:
    """Index covering the scales of ``S`` plus a boolean mask of its cubes."""
    cubes, shift = _family(S)
    ks = [c.k for c in cubes] + list(extra_k)
    idx = CubeIndex(shift, min(ks), max(ks), sets)
    mask = np.zeros(idx.size, dtype=bool)
    for c in cubes:
        node = idx.node_of(c)
        if node >= 0:
            mask[node] = True
    return idx, mask


def eval_sparse(params: OperatorParams, S, f1, sigma1: DiscreteMeasure, f2, sigma2: DiscreteMeasure, at,
                root: DyadicCube | None = None) -> np.ndarray:
    """Sparse operator over the cubes of ``S`` (only those inside ``root`` if given)."""
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    pts = _points(at)
    cubes, shift = _family(S)
    if root is not None:
        cubes = [c for c in cubes if c.k >= root.k and c.ancestor(root.k) == root]
    if not cubes or not pts:
        return np.zeros(len(pts))
    idx, mask = sparse_index(cubes, [sigma1.points, sigma2.points, pts])
    F1 = idx.node_sum(0, f1 * sigma1.masses)
    F2 = idx.node_sum(1, f2 * sigma2.masses)
    term = np.where(mask, params.coef(idx.node_logvol) * (F1 * F2), 0.0)
    return idx.chain_sum(2, term)


def pointwise_upper_constant(params: OperatorParams) -> float:
    """C1 with I^D <= C1 * I_alpha pointwise: (2 sqrt n)^(2n-a) / (1 - 2^(a-2n))."""
    e = 2 * params.n - params.alpha
    return (2 * math.sqrt(params.n)) ** e / (1 - 2.0 ** (-e))


def pointwise_lower_constant(params: OperatorParams) -> float:
    """Covering bound for I_alpha <= C * sum_t I^{D_t}: 6^(2n - alpha).

    Valid whenever every covering cube of a triple {x, y1, y2} is admitted by
    the windows (the scales are fine and coarse enough).
    """
    return 6.0 ** (2 * params.n - params.alpha)


def cube_term(params: OperatorParams, cube: DyadicCube, int1: float, int2: float) -> float:
    """One summand |Q|^{-(2 - alpha/n)} int_Q f1 int_Q f2."""
    vol = float(side_length(cube.k)) ** params.n
    return vol ** (-params.cube_exponent) * int1 * int2
