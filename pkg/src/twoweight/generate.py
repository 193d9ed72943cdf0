"""Seeded random instances on a rational lattice."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .geometry import DyadicCube, standard_shift
from .measure import DiscreteMeasure, validate_exponents
from .operators import OperatorParams, TruncationWindow
from .testing import Instance

# 3 * 2^8: coordinates sit on both the standard and the one-third grids' scales
LATTICE = 768
MASS_RANGE = (1e-2, 1e2)


def random_measures(rng: np.random.Generator, n: int, counts, spread: int = 1) -> list[DiscreteMeasure]:
    """Measures with the given atom counts and no point shared between any two."""
    side = LATTICE * spread
    total = int(sum(counts))
    if total > side ** n:
        raise ValueError("too many atoms for the lattice")
    seen: set = set()
    pts: list = []
    while len(pts) < total:
        cand = tuple(int(v) for v in rng.integers(0, side, size=n))
        if cand not in seen:
            seen.add(cand)
            pts.append(tuple(Fraction(v, LATTICE) for v in cand))
    lo, hi = np.log(MASS_RANGE[0]), np.log(MASS_RANGE[1])
    out, start = [], 0
    for c in counts:
        masses = np.exp(rng.uniform(lo, hi, size=c))
        out.append(DiscreteMeasure(pts[start:start + c], masses, n=n))
        start += c
    return out


def gen_instance(seed: int, n: int, counts=(8, 8, 8), alpha: float = 1.0, p1: float = 2.0, p2: float = 2.0,
                 q: float = 2.0, spread: int = 1, k_min: int = -10, k_max: int = 12, delta: float = 0.25,
                 force: bool = False) -> Instance:
    """Deterministic instance for ``seed``; atoms lie in [0, spread)^n."""
    params = OperatorParams(n, alpha)
    exps = validate_exponents(p1, p2, q, force=force)
    rng = np.random.default_rng(seed)
    s1, s2, w = random_measures(rng, n, counts, spread)
    shift = standard_shift(n)
    window = None
    if spread == 1 and k_min <= 0 <= k_max:
        window = TruncationWindow(k_min, k_max, DyadicCube(0, (0,) * n, shift))
    return Instance.build(params, exps, s1, s2, w, shift=shift, window=window, delta=delta, seed=seed)
