"""Shifted dyadic grids with exact rational coordinates.

A grid shift is a tuple of flags in {0, 1}; flag 1 stands for the offset 1/3
in that coordinate.  The cube ``DyadicCube(k, m, t)`` is

    2^{-k} ([0, 1)^n + m + (-1)^k t)

which is half-open on the right in every coordinate.  Everything here is
integer or :class:`fractions.Fraction` arithmetic, so boundary membership is
exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

Shift = tuple[int, ...]
Point = tuple[Fraction, ...]


def as_rational(value) -> Fraction:
    """Convert a coordinate to an exact rational.

    Strings such as ``"1/3"`` and ints are taken literally.  Floats are read
    through their shortest decimal repr, so ``0.1`` becomes ``1/10`` rather
    than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coordinate {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    # numpy integers and friends
    return Fraction(value)


def as_point(coords) -> Point:
    return tuple(as_rational(c) for c in coords)


def make_shift(flags: Sequence) -> Shift:
    """Build a shift from integer flags (0/1) or from the offsets 0 and 1/3."""
    out = []
    for f in flags:
        if isinstance(f, int) and not isinstance(f, bool) and f in (0, 1):
            out.append(int(f))
            continue
        r = as_rational(f)
        if r == 0:
            out.append(0)
        elif r == Fraction(1, 3):
            out.append(1)
        else:
            raise ValueError(f"shift coordinates must be 0 or 1/3, got {f!r}")
    return tuple(out)


def all_shifts(n: int) -> list[Shift]:
    """The 2^n grid shifts in lexicographic order."""
    return [tuple(t) for t in itertools.product((0, 1), repeat=n)]


def standard_shift(n: int) -> Shift:
    return (0,) * n


def shift_offsets(shift: Shift) -> tuple[Fraction, ...]:
    return tuple(Fraction(f, 3) for f in shift)


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def side_length(k: int) -> Fraction:
    return Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)


@dataclass(frozen=True)
class AxisCube:
    """Half-open axis-parallel cube ``corner + [0, side)^n``."""

    corner: Point
    side: Fraction

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("cube side must be positive")

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def upper(self) -> Point:
        return tuple(c + self.side for c in self.corner)

    @property
    def volume(self) -> Fraction:
        return self.side ** self.n

    def contains(self, x) -> bool:
        return all(c <= xi < c + self.side for c, xi in zip(self.corner, x))

    def contains_cube(self, other: "AxisCube") -> bool:
        return all(
            a <= b and b + other.side <= a + self.side
            for a, b in zip(self.corner, other.corner)
        )

    @classmethod
    def from_values(cls, corner, side) -> "AxisCube":
        return cls(as_point(corner), as_rational(side))


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Cube of scale ``k`` (side 2^-k) at integer position ``m`` in grid ``shift``."""

    k: int
    m: tuple[int, ...]
    shift: Shift

    @property
    def n(self) -> int:
        return len(self.m)

    @property
    def side(self) -> Fraction:
        return side_length(self.k)

    @property
    def volume(self) -> Fraction:
        return self.side ** self.n

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.k - 1, parent_position(self.m, self.k, self.shift), self.shift)

    def ancestor(self, k: int) -> "DyadicCube":
        if k > self.k:
            raise ValueError("ancestor scale must not be finer than the cube")
        m = self.m
        for j in range(self.k, k, -1):
            m = parent_position(m, j, self.shift)
        return DyadicCube(k, m, self.shift)

    def contains(self, x) -> bool:
        return locate(x, self.k, self.shift) == self.m

    def __str__(self) -> str:
        box = realize(self)
        parts = [f"[{c},{c + box.side})" for c in box.corner]
        return "x".join(parts)


def realize(cube: DyadicCube) -> AxisCube:
    s = _sign(cube.k)
    side = cube.side
    corner = tuple(side * (mi + Fraction(s * f, 3)) for mi, f in zip(cube.m, cube.shift))
    return AxisCube(corner, side)


def locate(x, k: int, shift: Shift) -> tuple[int, ...]:
    """Position ``m`` of the scale-``k`` cube of grid ``shift`` containing ``x``."""
    s = _sign(k)
    out = []
    for xi, f in zip(x, shift):
        xi = as_rational(xi)
        p, q = xi.numerator, xi.denominator
        # floor(2^k x - s f / 3) with exact integers
        if k >= 0:
            out.append((3 * (p << k) - s * f * q) // (3 * q))
        else:
            d = 3 * (q << -k)
            out.append((3 * p - s * f * (q << -k)) // d)
    return tuple(out)


def cube_at(x, k: int, shift: Shift) -> DyadicCube:
    return DyadicCube(k, locate(x, k, shift), tuple(shift))


def parent_position(m: Sequence[int], k: int, shift: Shift) -> tuple[int, ...]:
    """Position of the parent (scale k-1) of the scale-k cube at ``m``."""
    s = _sign(k - 1)
    return tuple((mi - s * f) // 2 for mi, f in zip(m, shift))


def children(cube: DyadicCube) -> list[DyadicCube]:
    s = _sign(cube.k)
    base = [2 * mi + s * f for mi, f in zip(cube.m, cube.shift)]
    kids = []
    for e in itertools.product((0, 1), repeat=cube.n):
        kids.append(DyadicCube(cube.k + 1, tuple(b + ei for b, ei in zip(base, e)), cube.shift))
    return kids


def contains(cube: DyadicCube, x) -> bool:
    return cube.contains(x)


def is_ancestor(outer: DyadicCube, inner: DyadicCube, strict: bool = False) -> bool:
    """True when ``inner`` is contained in ``outer`` (same grid required)."""
    if outer.shift != inner.shift:
        raise ValueError("cubes belong to different grids")
    if outer.k > inner.k or (strict and outer.k == inner.k):
        return False
    return inner.ancestor(outer.k).m == outer.m


def scale_for_side(side: Fraction) -> int:
    """Largest k with 2^-k >= side."""
    side = as_rational(side)
    k = -math.ceil(math.log2(side)) if side > 0 else 0
    while side_length(k) < side:
        k -= 1
    while side_length(k + 1) >= side:
        k += 1
    return k


def covering_cube(Q: AxisCube, proof_scale: bool = False) -> tuple[Shift, DyadicCube]:
    """A grid cube containing ``Q`` with side at most ``6 l(Q)``.

    Candidates are all scales with ``l(Q) <= 2^-k <= 6 l(Q)`` (or only
    ``3 l(Q) <= 2^-k <= 6 l(Q)`` with ``proof_scale=True``), all shifts.  The
    smallest side wins, then the lexicographically smallest shift.
    """
    lo = 3 * Q.side if proof_scale else Q.side
    hi = 6 * Q.side
    k_coarse = scale_for_side(hi + Fraction(0))
    # k_coarse: largest k with 2^-k >= 6l; step to 2^-k <= 6l
    while side_length(k_coarse) > hi:
        k_coarse += 1
    k = scale_for_side(lo)  # finest admissible
    upper = Q.upper
    while k >= k_coarse:
        for t in all_shifts(Q.n):
            cube = cube_at(Q.corner, k, t)
            box = realize(cube)
            if all(u <= b for u, b in zip(upper, box.upper)):
                return t, cube
        k -= 1
    raise RuntimeError(f"no covering grid cube for {Q}; grid invariant violated")


def iter_cubes(k: int, shift: Shift, box: AxisCube) -> Iterator[DyadicCube]:
    """All scale-k cubes of the grid that meet ``box``."""
    s = _sign(k)
    scale = 1 / side_length(k)
    lo = locate(box.corner, k, shift)
    hi = [math.ceil(scale * u - Fraction(s * f, 3)) - 1 for u, f in zip(box.upper, shift)]
    for m in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        yield DyadicCube(k, tuple(m), shift)
