"""Level sets of the sparse operator and principal (stopping) cubes.

The sparse operator restricted to a root ``R`` is a finite sum of cube
indicators, so each level set ``{I > 2^k}`` is an exact union of cubes of the
family.  Exceptional and weak-type sets are represented by the indices of the
``w`` atoms they contain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._index import CubeIndex
from .geometry import DyadicCube
from .measure import DiscreteMeasure, _check
from .operators import OperatorParams, _family


def restrict_family(S, root: DyadicCube | None) -> list[DyadicCube]:
    cubes, _ = _family(S)
    if root is None:
        return sorted(cubes)
    return sorted(c for c in cubes if c.k >= root.k and c.ancestor(root.k) == root)


@dataclass
class LevelSetDecomposition:
    root: DyadicCube | None
    delta: float
    levels: list[int]
    maximal: dict  # k -> list of maximal cubes Q_j^k
    exceptional: dict  # (k, Q) -> indices of w atoms in Q n Omega_{k+1} minus Omega_{k+2}
    weak_sets: dict  # (k, Q) -> indices of w atoms in Q n Omega_{k+1}
    selected: dict  # parity -> [(k, Q)] with w(E) > delta w(Q)
    values: np.ndarray  # operator at the w atoms
    w_mass: dict = field(default_factory=dict)  # Q -> w(Q)

    def omega(self, k: int) -> list[DyadicCube]:
        return self.maximal.get(k, [])

    def cubes(self) -> Iterable[tuple[int, DyadicCube]]:
        for k in self.levels:
            for Q in self.maximal[k]:
                yield k, Q


def _level_range(values: np.ndarray) -> tuple[int, int] | None:
    pos = values[values > 0]
    if pos.size == 0:
        return None
    lo = math.floor(math.log2(float(pos.min()))) - 1
    top = float(pos.max())
    hi = math.ceil(math.log2(top))
    while 2.0 ** hi >= top:
        hi -= 1
    while 2.0 ** (hi + 1) < top:
        hi += 1
    return lo, hi


def _cumulative(idx: CubeIndex, term: np.ndarray) -> np.ndarray:
    """Sum of ``term`` over each node and its ancestors."""
    cum = term.copy()
    for j in range(1, idx.levels):
        nodes = np.nonzero(idx.node_level == j)[0]
        par = idx.parent[nodes]
        ok = par >= 0
        cum[nodes[ok]] += cum[par[ok]]
    return cum


def level_sets(params: OperatorParams, S, root: DyadicCube | None, f1, sigma1: DiscreteMeasure, f2,
               sigma2: DiscreteMeasure, w: DiscreteMeasure, delta: float = 0.25) -> LevelSetDecomposition:
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    cubes = restrict_family(S, root)
    empty = LevelSetDecomposition(root, delta, [], {}, {}, {}, {0: [], 1: []}, np.zeros(len(w)))
    if not cubes:
        return empty
    shift = cubes[0].shift
    k_lo = min(c.k for c in cubes) if root is None else root.k
    idx = CubeIndex(shift, k_lo, max(c.k for c in cubes), [sigma1.points, sigma2.points, w.points])
    mask = np.zeros(idx.size, dtype=bool)
    for c in cubes:
        node = idx.node_of(c)
        if node >= 0:
            mask[node] = True
    F1 = idx.node_sum(0, f1 * sigma1.masses)
    F2 = idx.node_sum(1, f2 * sigma2.masses)
    term = np.where(mask, params.coef(idx.node_logvol) * (F1 * F2), 0.0)
    cum = _cumulative(idx, term)
    strict = cum - term
    values = idx.chain_sum(2, term) if len(w) else np.zeros(0)
    wnode = idx.node_sum(2, w.masses)

    span = _level_range(np.where(mask, cum, 0.0))
    if span is None:
        return empty
    levels = list(range(span[0], span[1] + 1))
    maximal, exceptional, weak_sets, w_mass = {}, {}, {}, {}
    wchain = idx.chains[2]
    for k in levels:
        t = 2.0 ** k
        nodes = np.nonzero(mask & (strict <= t) & (cum > t))[0]
        maximal[k] = idx.cubes(nodes)
        for node, Q in zip(nodes, maximal[k]):
            inside = wchain[Q.k - idx.k_lo] == node if len(w) else np.zeros(0, dtype=bool)
            weak = inside & (values > 2 * t)
            weak_sets[(k, Q)] = np.nonzero(weak)[0]
            exceptional[(k, Q)] = np.nonzero(weak & (values <= 4 * t))[0]
            w_mass[Q] = float(wnode[node])
    selected = {0: [], 1: []}
    for k in levels:
        for Q in maximal[k]:
            wE = float(np.sum(w.masses[exceptional[(k, Q)]]))
            if wE > delta * w_mass[Q]:
                selected[k % 2].append((k, Q))
    return LevelSetDecomposition(root, delta, levels, maximal, exceptional, weak_sets, selected, values, w_mass)


@dataclass(frozen=True)
class PrincipleCheck:
    """Outcome of :func:`check_maximum_principle`; falsy on violation."""

    ok: bool
    cube: DyadicCube | None = None
    level: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def cube_terms(params: OperatorParams, cubes: Iterable[DyadicCube], f1, sigma1: DiscreteMeasure, f2,
               sigma2: DiscreteMeasure) -> dict:
    """Summand and the two integrals for each cube, by direct membership tests."""
    out = {}
    g1 = f1 * sigma1.masses
    g2 = f2 * sigma2.masses
    for Q in cubes:
        i1 = float(np.sum(g1 * sigma1.indicator(Q)))
        i2 = float(np.sum(g2 * sigma2.indicator(Q)))
        vol = 2.0 ** (-Q.k * params.n)
        out[Q] = (vol ** (-params.cube_exponent) * i1 * i2, i1, i2)
    return out


def check_maximum_principle(decomp: LevelSetDecomposition, params: OperatorParams, S, root, f1,
                            sigma1: DiscreteMeasure, f2, sigma2: DiscreteMeasure,
                            w: DiscreteMeasure | None = None) -> PrincipleCheck:
    """Recheck the decomposition from scratch.

    For each maximal cube: the sum over family cubes containing it exceeds
    2^k while the sum over strict ancestors does not.  When ``w`` is given,
    the localized operator is above 2^k on every exceptional atom, the
    exceptional sets of one parity are disjoint, ``sum_j w(E_j^k) <=
    w(Omega_{k+1})`` and selected cubes do not reappear two levels up.
    """
    f1 = _check(f1, sigma1)
    f2 = _check(f2, sigma2)
    cubes = restrict_family(S, root)
    terms = cube_terms(params, cubes, f1, sigma1, f2, sigma2)

    def chain(Q):
        return [c for c in cubes if c.k <= Q.k and Q.ancestor(c.k) == c]

    tol = 1e-12
    for k, Q in decomp.cubes():
        t = 2.0 ** k
        anc = chain(Q)
        total = sum(terms[c][0] for c in anc)
        strict = total - terms[Q][0] if Q in terms else total
        if total <= t * (1 - tol):
            return PrincipleCheck(False, Q, k, "sum over containing cubes is not above 2^k")
        if strict > t * (1 + tol):
            return PrincipleCheck(False, Q, k, "sum over strict ancestors exceeds 2^k")
        if w is None:
            continue
        E = decomp.exceptional[(k, Q)]
        if len(E):
            # localized operator: inner cubes unchanged, outer cubes see only Q
            _, i1, i2 = terms[Q]
            outer = sum(terms[c][0] / (terms[c][1] * terms[c][2]) * i1 * i2
                        for c in anc if c != Q and terms[c][1] * terms[c][2] > 0)
            local = decomp.values[E] - strict + outer
            if np.any(local <= t * (1 - tol)):
                return PrincipleCheck(False, Q, k, "localized operator not above 2^k on the exceptional set")
    if w is None:
        return PrincipleCheck(True)

    for parity, chosen in decomp.selected.items():
        seen: set = set()
        for k, Q in chosen:
            E = set(decomp.exceptional[(k, Q)].tolist())
            if seen & E:
                return PrincipleCheck(False, Q, k, "exceptional sets overlap within a parity class")
            seen |= E
            if Q in decomp.omega(k + 2):
                return PrincipleCheck(False, Q, k, "selected cube is maximal two levels up")
    for k in decomp.levels:
        wE = sum(float(np.sum(w.masses[decomp.exceptional[(k, Q)]])) for Q in decomp.omega(k))
        wO = float(np.sum(w.masses[decomp.values > 2.0 ** (k + 1)]))
        if wE > wO * (1 + tol) + tol:
            return PrincipleCheck(False, None, k, "exceptional mass exceeds the next level set")
    return PrincipleCheck(True)


@dataclass
class PrincipalForest:
    generations: list[list[DyadicCube]]
    principal_of: dict  # cube -> minimal principal ancestor G(Q)
    averages: dict  # cube -> E_Q f

    @property
    def cubes(self) -> list[DyadicCube]:
        return [G for gen in self.generations for G in gen]

    def __len__(self) -> int:
        return sum(len(g) for g in self.generations)


def sigma_average(f, sigma: DiscreteMeasure, Q: DyadicCube) -> tuple[float, float]:
    """(E_Q f, sigma(Q)) with E_Q f = 0 when sigma(Q) = 0."""
    ind = sigma.indicator(Q)
    mass = float(np.sum(ind * sigma.masses))
    if mass == 0:
        return 0.0, 0.0
    return float(np.sum(ind * f * sigma.masses)) / mass, mass


def principal_cubes(f, sigma: DiscreteMeasure, forest: Iterable[DyadicCube]) -> PrincipalForest:
    """Stopping cubes where the sigma-average of f jumps by more than 4.

    Roots are the maximal cubes of ``forest``.  Going from coarse to fine,
    a cube becomes principal when its average exceeds four times that of its
    nearest principal ancestor.
    """
    f = _check(f, sigma)
    cubes = sorted(set(forest))
    members = set(cubes)
    averages = {Q: sigma_average(f, sigma, Q)[0] for Q in cubes}
    k_top = min((c.k for c in cubes), default=0)
    principal_of: dict = {}
    generation: dict = {}
    for Q in cubes:
        up = Q
        parent = None
        while up.k > k_top:
            up = up.parent()
            if up in members:
                parent = up
                break
        if parent is None:
            principal_of[Q] = Q
            generation[Q] = 0
            continue
        G = principal_of[parent]
        if averages[Q] > 4 * averages[G]:
            principal_of[Q] = Q
            generation[Q] = generation[G] + 1
        else:
            principal_of[Q] = G
    depth = max(generation.values(), default=-1) + 1
    generations: list[list[DyadicCube]] = [[] for _ in range(depth)]
    for G, g in sorted(generation.items()):
        generations[g].append(G)
    return PrincipalForest(generations, principal_of, averages)


def carleson_sum(forest: PrincipalForest, f, sigma: DiscreteMeasure, p: float) -> float:
    """sum over principal G of (E_G f)^p sigma(G)."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    f = _check(f, sigma)
    total = 0.0
    for G in forest.cubes:
        avg, mass = sigma_average(f, sigma, G)
        total += avg ** p * mass
    return total


def carleson_bound(f, sigma: DiscreteMeasure, p: float) -> float:
    """(4/3) (p')^p ||f||_p^p."""
    f = _check(f, sigma)
    pc = p / (p - 1)
    return 4.0 / 3.0 * pc ** p * float(np.sum(np.abs(f) ** p * sigma.masses))
