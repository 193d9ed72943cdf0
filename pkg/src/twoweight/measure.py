"""Finite atomic measures, norms, averages and the dyadic maximal operator.

A "simple function" over a measure is just a 1-d float array with one
nonnegative value per atom, in atom order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Point, Shift, as_point, cube_at

# Conjugate exponents that should be equal (e.g. p1 + p2 == p1 p2) can miss
# by an ulp; comparisons use this slack.
EXPONENT_SLACK = 1e-12


class DiscreteMeasure:
    """Positive weighted atoms in R^n with exact rational positions."""

    def __init__(self, points: Sequence, masses, n: int | None = None):
        pts = tuple(as_point(p) for p in points)
        mass = np.asarray(masses, dtype=float).reshape(-1)
        if len(pts) != mass.size:
            raise ValueError("one mass per atom is required")
        if n is None:
            if not pts:
                raise ValueError("dimension must be given for an empty measure")
            n = len(pts[0])
        if any(len(p) != n for p in pts):
            raise ValueError("all atoms must have dimension %d" % n)
        if mass.size and not (np.all(np.isfinite(mass)) and np.all(mass > 0)):
            raise ValueError("atom masses must be finite and strictly positive")
        if len(set(pts)) != len(pts):
            raise ValueError("atom points must be pairwise distinct")
        self.n = int(n)
        self.points: tuple[Point, ...] = pts
        mass.setflags(write=False)
        self.masses = mass
        self._float_points = None

    @classmethod
    def empty(cls, n: int) -> "DiscreteMeasure":
        return cls([], [], n=n)

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={self.n}, atoms={len(self)}, total={self.total_mass:g})"

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses)) if len(self) else 0.0

    @property
    def float_points(self) -> np.ndarray:
        if self._float_points is None:
            arr = np.array([[float(c) for c in p] for p in self.points], dtype=float)
            self._float_points = arr.reshape(len(self), self.n)
        return self._float_points

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.masses * c, n=self.n)

    def restricted(self, cube) -> "DiscreteMeasure":
        keep = self.indicator(cube).astype(bool)
        return DiscreteMeasure(
            [p for p, k in zip(self.points, keep) if k], self.masses[keep], n=self.n
        )

    def indicator(self, cube) -> np.ndarray:
        """1_Q evaluated at the atoms; ``cube`` is anything with ``contains``."""
        if hasattr(cube, "contains"):
            test = cube.contains
        else:
            from .geometry import contains

            def test(x):
                return contains(cube, x)

        return np.array([1.0 if test(p) else 0.0 for p in self.points])

    def mass_of(self, cube) -> float:
        return float(np.sum(self.masses * self.indicator(cube)))


def _check(f, mu: DiscreteMeasure) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != len(mu):
        raise ValueError(f"function has {f.size} values but measure has {len(mu)} atoms")
    return f


def lp_norm(f, p: float, mu: DiscreteMeasure) -> float:
    """(sum |f|^p mass)^(1/p); +inf if f is infinite on an atom."""
    f = np.abs(_check(f, mu))
    if p < 1:
        raise ValueError("p must be at least 1")
    if f.size == 0:
        return 0.0
    if np.any(np.isinf(f)):
        return math.inf
    return float(np.sum(f ** p * mu.masses)) ** (1.0 / p)


def weak_lq_norm(g, q: float, w: DiscreteMeasure) -> float:
    """sup_l l * w(|g| > l)^(1/q), evaluated exactly on the finite value set.

    The supremum is approached as l increases to a value v of |g|, giving
    v * w(|g| >= v)^(1/q); the maximum over those values is the norm.
    """
    g = np.abs(_check(g, w))
    pos = g > 0
    if not np.any(pos):
        return 0.0
    if np.any(np.isinf(g[pos])):
        return math.inf
    vals = g[pos]
    mass = w.masses[pos]
    order = np.argsort(-vals, kind="stable")
    vals, mass = vals[order], mass[order]
    tail = np.cumsum(mass)
    # ties: the level set {g >= v} includes every atom with that value
    last = np.r_[vals[1:] != vals[:-1], True]
    return float(np.max(vals[last] * tail[last] ** (1.0 / q)))


def average(f, mu: DiscreteMeasure, Q) -> float:
    """mu(Q)^-1 * int_Q f dmu, with the convention 0 when mu(Q) = 0."""
    f = _check(f, mu)
    ind = mu.indicator(Q)
    mass = float(np.sum(ind * mu.masses))
    if mass == 0:
        return 0.0
    return float(np.sum(ind * f * mu.masses)) / mass


def dyadic_maximal(f, mu: DiscreteMeasure, shift: Shift, k_min: int, k_max: int) -> np.ndarray:
    """max over grid cubes of scales k_min..k_max containing each atom of the average."""
    f = _check(f, mu)
    out = np.zeros(len(mu))
    if len(mu) == 0:
        return out
    fm = f * mu.masses
    for k in range(k_min, k_max + 1):
        groups: dict[tuple, list[int]] = {}
        for i, p in enumerate(mu.points):
            groups.setdefault(cube_at(p, k, shift).m, []).append(i)
        for idx in groups.values():
            avg = sum(fm[i] for i in idx) / sum(mu.masses[i] for i in idx)
            for i in idx:
                if avg > out[i]:
                    out[i] = avg
    return out


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class ExponentTuple:
    p1: float
    p2: float
    q: float
    outside_hypotheses: bool = field(default=False, compare=False)

    @property
    def p1c(self) -> float:
        return conjugate(self.p1)

    @property
    def p2c(self) -> float:
        return conjugate(self.p2)

    @property
    def qc(self) -> float:
        return conjugate(self.q)

    def as_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "q": self.q}


def exponent_violations(p1: float, p2: float, q: float) -> list[str]:
    bad = []
    if not p1 > 1:
        bad.append("p1 > 1")
    if not p2 > 1:
        bad.append("p2 > 1")
    if not q >= p1:
        bad.append("q >= p1")
    if not q >= p2:
        bad.append("q >= p2")
    if not p1 + p2 >= p1 * p2 * (1 - EXPONENT_SLACK):
        bad.append("p1 + p2 >= p1*p2")
    return bad


def validate_exponents(p1: float, p2: float, q: float, force: bool = False) -> ExponentTuple:
    """Check ``q >= p1, p2 > 1`` and ``p1 + p2 >= p1 p2``.

    With ``force=True`` out-of-range tuples are returned flagged as outside
    the hypotheses instead of raising (all exponents must still exceed 1).
    """
    p1, p2, q = float(p1), float(p2), float(q)
    bad = exponent_violations(p1, p2, q)
    if bad and (not force or min(p1, p2, q) <= 1):
        raise ValueError("exponents violate: " + ", ".join(bad))
    return ExponentTuple(p1, p2, q, outside_hypotheses=bool(bad))


def kolmogorov_sides(g, q: float, w: DiscreteMeasure, Q) -> tuple[float, float]:
    """Both sides of the Kolmogorov inequality on ``Q``.

    Left: the average of |g| over Q under w.  Right: q/(q-1) times the weak
    L^q norm of g restricted to Q under the normalized measure w / w(Q).
    Returns (0, 0) when w(Q) = 0.
    """
    g = np.abs(_check(g, w))
    wQ = w.restricted(Q)
    total = wQ.total_mass
    if total == 0:
        return 0.0, 0.0
    inside = w.indicator(Q).astype(bool)
    lhs = float(np.sum(g[inside] * wQ.masses)) / total
    rhs = q / (q - 1.0) * weak_lq_norm(g[inside], q, wQ.scaled(1.0 / total))
    return lhs, rhs
