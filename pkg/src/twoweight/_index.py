"""Ancestor chains of atoms in one dyadic grid.

For every atom and every scale in ``[k_lo, k_hi]`` we record the id of the
grid cube containing it.  Cube ids are shared between all point sets, so a
finite operator sum over grid cubes turns into gathers and ``bincount``
reductions over these chains.  Node ids are sorted by (scale, position),
which fixes every reduction order.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import DyadicCube, Shift, locate


class CubeIndex:
    def __init__(self, shift: Shift, k_lo: int, k_hi: int, point_sets: Sequence[Sequence]):
        if k_lo > k_hi:
            raise ValueError("empty scale range")
        self.shift = tuple(shift)
        self.n = len(shift)
        self.k_lo, self.k_hi = int(k_lo), int(k_hi)
        L = self.levels = self.k_hi - self.k_lo + 1
        flags = np.array(self.shift, dtype=np.int64)

        positions = []  # per set: (L, N, n) int64
        for pts in point_sets:
            N = len(pts)
            pos = np.zeros((L, N, self.n), dtype=np.int64)
            if N:
                pos[L - 1] = np.array([locate(p, self.k_hi, self.shift) for p in pts], dtype=np.int64)
                for j in range(L - 1, 0, -1):
                    k = self.k_lo + j
                    s = -1 if (k - 1) % 2 else 1
                    pos[j - 1] = np.floor_divide(pos[j] - s * flags, 2)
            positions.append(pos)

        sizes = [p.shape[1] for p in positions]
        total = sum(sizes)
        keys = np.zeros((L * total, 1 + self.n), dtype=np.int64)
        level_col = np.repeat(np.arange(L, dtype=np.int64), total)
        keys[:, 0] = level_col
        if total:
            keys[:, 1:] = np.concatenate(positions, axis=1).reshape(L * total, self.n)
            uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
            inverse = inverse.reshape(L, total)
        else:
            uniq = np.zeros((0, 1 + self.n), dtype=np.int64)
            inverse = np.zeros((L, 0), dtype=np.int64)
        self.size = uniq.shape[0]
        self.node_level = uniq[:, 0].copy()
        self.node_k = self.node_level + self.k_lo
        self.node_m = uniq[:, 1:].copy()

        self.chains = []
        start = 0
        for N in sizes:
            self.chains.append(np.ascontiguousarray(inverse[:, start:start + N]))
            start += N

        self.parent = np.full(self.size, -1, dtype=np.int64)
        if L > 1 and total:
            self.parent[inverse[1:].ravel()] = inverse[:-1].ravel()

        # log2 of the volume 2^{-kn}
        self.node_logvol = -(self.node_k * self.n).astype(float)
        self._lookup = None

    # -- cube <-> node -------------------------------------------------
    def cube(self, node: int) -> DyadicCube:
        return DyadicCube(int(self.node_k[node]), tuple(int(v) for v in self.node_m[node]), self.shift)

    def cubes(self, nodes) -> list[DyadicCube]:
        return [self.cube(int(i)) for i in nodes]

    def node_of(self, cube: DyadicCube) -> int:
        """Node id of ``cube`` or -1 if no indexed atom lies in it."""
        if self._lookup is None:
            self._lookup = {
                (int(k), tuple(int(v) for v in m)): i
                for i, (k, m) in enumerate(zip(self.node_k, self.node_m))
            }
        if tuple(cube.shift) != self.shift:
            raise ValueError("cube belongs to a different grid")
        return self._lookup.get((cube.k, tuple(cube.m)), -1)

    def node_volume(self) -> np.ndarray:
        return np.exp2(self.node_logvol)

    def exact_volume(self, node: int) -> Fraction:
        k = int(self.node_k[node])
        side = Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)
        return side ** self.n

    # -- reductions ----------------------------------------------------
    def node_sum(self, which: int, weights) -> np.ndarray:
        """Per cube, the sum of ``weights`` over the atoms of set ``which`` inside it."""
        ch = self.chains[which]
        w = np.asarray(weights, dtype=float)
        if ch.shape[1] == 0:
            return np.zeros(self.size)
        return np.bincount(ch.ravel(), weights=np.tile(w, self.levels), minlength=self.size)

    def chain_sum(self, which: int, node_values) -> np.ndarray:
        """Per atom of set ``which``, the sum of ``node_values`` along its chain."""
        ch = self.chains[which]
        if ch.shape[1] == 0:
            return np.zeros(0)
        return np.asarray(node_values, dtype=float)[ch].sum(axis=0)

    def ancestor_table(self) -> np.ndarray:
        """(levels, size) table of ancestor ids; -1 below a node's own level."""
        anc = np.full((self.levels, self.size), -1, dtype=np.int64)
        idx = np.arange(self.size)
        anc[self.node_level, idx] = idx
        for j in range(self.levels - 1, 0, -1):
            cols = np.nonzero(anc[j] >= 0)[0]
            par = self.parent[anc[j, cols]]
            ok = par >= 0
            anc[j - 1, cols[ok]] = par[ok]
        return anc

    def within(self, root: DyadicCube | None, k_min: int, k_max: int) -> np.ndarray:
        """Mask of indexed cubes with scale in [k_min, k_max] contained in ``root``."""
        mask = (self.node_k >= k_min) & (self.node_k <= k_max)
        if root is None:
            return mask
        if tuple(root.shift) != self.shift:
            raise ValueError("window root belongs to a different grid")
        mask &= self.node_k >= root.k
        j = root.k - self.k_lo
        if j < 0 or j >= self.levels:
            return np.zeros(self.size, dtype=bool)
        anc = self.ancestor_table()[j]
        rid = self.node_of(root)
        return mask & (anc == rid) & (rid >= 0)
