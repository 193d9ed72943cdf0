"""Testing constants and lower bounds for the best norm constants.

Everything is computed for the sparse operator ``I^S`` of an instance.  The
operator is a finite sum over cubes, so with the matrices

    A1[P, a] = m1(a) 1_P(a),   A2[P, b] = m2(b) 1_P(b),   B[x, P] = 1_P(x)

we get ``I^S(f1 s1, f2 s2)(x) = B @ (c * (A1 f1) * (A2 f2))`` where ``c`` holds
the cube coefficients ``|P|^-(2 - alpha/n)``.  Objectives are evaluated for
many (f1, f2) columns at once.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._index import CubeIndex
from .geometry import DyadicCube, Shift, standard_shift
from .measure import DiscreteMeasure, ExponentTuple, validate_exponents
from .operators import OperatorParams, TruncationWindow, default_window, eval_sparse, _family
from .sparse import SparseFamily, build_sparse, verify_sparsity

__all__ = [
    "Instance", "OptimizerConfig", "VerificationReport", "TestingConstants", "validate_exponents",
    "testing_constants", "estimate_strong_norm", "estimate_weak_norm", "exhaustive_norm_oracle",
    "special_case_probe", "verify_theorem",
]

REL_TOL = 1e-9
ABS_TOL = 1e-12


@dataclass
class Instance:
    params: OperatorParams
    exponents: ExponentTuple
    sigma1: DiscreteMeasure
    sigma2: DiscreteMeasure
    w: DiscreteMeasure
    shift: Shift
    window: TruncationWindow
    S: SparseFamily
    delta: float = 0.25
    seed: int | None = None

    @classmethod
    def build(cls, params: OperatorParams, exponents: ExponentTuple, sigma1: DiscreteMeasure,
              sigma2: DiscreteMeasure, w: DiscreteMeasure, shift: Shift | None = None,
              window: TruncationWindow | None = None, S=None, delta: float = 0.25,
              seed: int | None = None) -> "Instance":
        """Fill in the default grid, window and family.

        The family defaults to the stopping cubes of ``f1 = f2 = 1``.
        """
        n = params.n
        for mu in (sigma1, sigma2, w):
            if mu.n != n:
                raise ValueError("measure dimension does not match the operator")
        shift = tuple(shift) if shift is not None else standard_shift(n)
        if window is None:
            window = default_window([sigma1, sigma2, w], shift)
        if window.root is not None:
            if tuple(window.root.shift) != shift:
                raise ValueError("window root is not a cube of the instance grid")
            for mu in (sigma1, sigma2, w):
                if any(not window.root.contains(p) for p in mu.points):
                    raise ValueError("window root must contain every atom")
        if S is None:
            S = build_sparse(params, shift, window, np.ones(len(sigma1)), sigma1, np.ones(len(sigma2)), sigma2)
        elif not isinstance(S, SparseFamily):
            S = SparseFamily.of(S, shift)
        if S.cubes and tuple(S.shift) != shift:
            raise ValueError("sparse family is not in the instance grid")
        return cls(params, exponents, sigma1, sigma2, w, shift, window, S, delta, seed)

    @property
    def singular(self) -> bool:
        """Some point carries mass of all three measures (the kernel blows up there)."""
        common = set(self.sigma1.points) & set(self.sigma2.points) & set(self.w.points)
        return bool(common)

    def scaled(self, which: str, c: float) -> "Instance":
        """Same instance with one measure multiplied by ``c`` (family kept)."""
        return replace(self, **{which: getattr(self, which).scaled(c)})


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_iter: int = 500
    rtol: float = 1e-9
    seed: int = 0
    indicator_seeds: int = 4
    dual_seeds: int = 2
    weak_iter: int = 100


# -- matrices ----------------------------------------------------------------

class _Problem:
    """Index, family masks and operator matrices of one instance."""

    def __init__(self, inst: Instance):
        self.inst = inst
        p = inst.params
        cubes, _ = _family(inst.S)
        win = inst.window
        ks = [c.k for c in cubes] + [win.k_top, win.k_max]
        self.idx = idx = CubeIndex(inst.shift, min(ks), max(ks),
                                   [inst.sigma1.points, inst.sigma2.points, inst.w.points])
        self.smask = np.zeros(idx.size, dtype=bool)
        for c in cubes:
            node = idx.node_of(c)
            if node >= 0:
                self.smask[node] = True
        self.wmask = idx.within(win.root, win.k_min, win.k_max)
        self.coef = np.where(self.smask, p.coef(idx.node_logvol), 0.0)
        self.mass = [inst.sigma1.masses, inst.sigma2.masses, inst.w.masses]
        self.node_mass = [idx.node_sum(i, self.mass[i]) for i in range(3)]

        rows = np.nonzero(self.smask)[0]
        self.rows = rows
        pos = np.full(idx.size, -1, dtype=np.int64)
        pos[rows] = np.arange(rows.size)
        self.member = []  # per set: (|S|, N) 0/1 membership
        for ch in idx.chains:
            M = np.zeros((rows.size, ch.shape[1]))
            r = pos[ch]
            lev, atom = np.nonzero(r >= 0)
            M[r[lev, atom], atom] = 1.0
            self.member.append(M)
        self.A1 = self.member[0] * inst.sigma1.masses[None, :]
        self.A2 = self.member[1] * inst.sigma2.masses[None, :]
        self.B = self.member[2].T
        self.c = self.coef[rows]

    # localized operators I^S(1_Q mu, 1_Q nu) at the atoms of set ``x`` inside every cube Q
    def localized(self, first: int, second: int, x: int) -> np.ndarray:
        """(levels, N_x) values of I^S(1_Q mu_first, 1_Q mu_second) at x, Q the level ancestor of x."""
        idx = self.idx
        ch = idx.chains[x]
        M, N = self.node_mass[first], self.node_mass[second]
        term = self.coef * M * N
        along = term[ch]
        suffix = np.cumsum(along[::-1], axis=0)[::-1]
        cc = self.coef[ch]
        above = np.cumsum(cc, axis=0) - cc
        return suffix + (M * N)[ch] * above

    def numerators(self, first: int, second: int, x: int, r: float) -> np.ndarray:
        """Per node Q: int_Q I^S(1_Q mu_first, 1_Q mu_second)^r d mu_x."""
        ch = self.idx.chains[x]
        if ch.shape[1] == 0:
            return np.zeros(self.idx.size)
        loc = self.localized(first, second, x)
        wts = self.mass[x][None, :] * loc ** r
        return np.bincount(ch.ravel(), weights=wts.ravel(), minlength=self.idx.size)

    # objectives for columns of functions
    def values(self, F1: np.ndarray, F2: np.ndarray) -> np.ndarray:
        U = self.A1 @ F1
        V = self.A2 @ F2
        return self.B @ (self.c[:, None] * U * V)

    def strong(self, G: np.ndarray) -> np.ndarray:
        q = self.inst.exponents.q
        return (self.inst.w.masses @ G ** q) ** (1.0 / q)

    def weak(self, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Weak L^{q,inf}(w) norms of columns and their extremal level sets."""
        q = self.inst.exponents.q
        m = self.inst.w.masses
        nw, R = G.shape
        out = np.zeros(R)
        sets = np.zeros((nw, R), dtype=bool)
        if nw == 0:
            return out, sets
        order = np.argsort(-G, axis=0, kind="stable")
        vals = np.take_along_axis(G, order, axis=0)
        tail = np.cumsum(m[order], axis=0)
        last = np.ones_like(vals, dtype=bool)
        last[:-1] = vals[1:] != vals[:-1]
        cand = np.where(last & (vals > 0), vals * tail ** (1.0 / q), 0.0)
        best = np.argmax(cand, axis=0)
        out = cand[best, np.arange(R)]
        for r in range(R):
            if out[r] > 0:
                sets[order[: best[r] + 1, r], r] = True
        return out, sets


def _normalize(F: np.ndarray, m: np.ndarray, p: float) -> np.ndarray:
    norms = (m @ np.abs(F) ** p) ** (1.0 / p)
    safe = np.where(norms > 0, norms, 1.0)
    return F / safe[None, :]


def _best_response(grad: np.ndarray, m: np.ndarray, p: float, old: np.ndarray) -> np.ndarray:
    """Maximizer of <grad, f> over nonnegative f with ||f||_{L^p(m)} = 1."""
    g = np.maximum(grad, 0.0) / m[:, None]
    F = _normalize(g ** (1.0 / (p - 1.0)), m, p)
    dead = ~np.any(g > 0, axis=0)
    F[:, dead] = old[:, dead]
    return F


# -- testing constants -------------------------------------------------------

@dataclass
class TestingConstants:
    T: float
    T1star: float
    T2star: float
    equi: float
    T_cubes: list = field(default_factory=list)  # window cubes, best first
    T1_cubes: list = field(default_factory=list)
    T2_cubes: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.T, self.T1star, self.T2star))


def _ratios(num: np.ndarray, den: np.ndarray, ok: np.ndarray, r: float) -> np.ndarray:
    out = np.full(num.shape, -1.0)
    good = ok & (den > 0)
    out[good] = num[good] ** (1.0 / r) / den[good]
    return out


def _ranked(prob: _Problem, ratios: np.ndarray, count: int) -> list[DyadicCube]:
    nodes = [int(i) for i in np.argsort(-ratios, kind="stable") if ratios[i] >= 0]
    return prob.idx.cubes(nodes[:count]) if count else prob.idx.cubes(nodes)


def _testing(prob: _Problem, keep: int = 8) -> TestingConstants:
    e = prob.inst.exponents
    s1, s2, w = prob.node_mass
    win = prob.wmask
    qc, p1c, p2c = e.qc, e.p1c, e.p2c
    den_T = s1 ** (1 / e.p1) * s2 ** (1 / e.p2)
    den_1 = w ** (1 / qc) * s2 ** (1 / e.p2)
    den_2 = s1 ** (1 / e.p1) * w ** (1 / qc)
    rT = _ratios(prob.numerators(0, 1, 2, e.q), den_T, win, e.q)
    r1 = _ratios(prob.numerators(2, 1, 0, p1c), den_1, win, p1c)
    r2 = _ratios(prob.numerators(0, 2, 1, p2c), den_2, win, p2c)
    rE = _ratios(prob.numerators(0, 1, 2, 1.0), den_T * w ** (1 / qc), win, 1.0)

    def top(r):
        return float(max(r.max(initial=0.0), 0.0))

    return TestingConstants(top(rT), top(r1), top(r2), top(rE),
                            _ranked(prob, rT, keep), _ranked(prob, r1, keep), _ranked(prob, r2, keep))


def testing_constants(inst: Instance) -> TestingConstants:
    """(T, T1*, T2*) as maxima over window cubes with nonzero denominators.

    The result also carries the localized weak-type ratio (the L^1 form of
    the strong testing ratio) and the best cubes of each kind.
    """
    return _testing(_Problem(inst))


# -- competitors -------------------------------------------------------------

def _indicator(prob: _Problem, which: int, Q: DyadicCube, p: float) -> np.ndarray:
    mu = (prob.inst.sigma1, prob.inst.sigma2, prob.inst.w)[which]
    f = mu.indicator(Q)
    n = float(mu.masses @ f) ** (1.0 / p) if f.any() else 1.0
    return f / n


def _dual_profile(prob: _Problem, first: int, second: int, x: int, Q: DyadicCube, r: float,
                  p: float) -> np.ndarray:
    """h^(r-1) normalized in L^p, h = I^S(1_Q mu_first, 1_Q mu_second) on the x atoms of Q."""
    j = Q.k - prob.idx.k_lo
    node = prob.idx.node_of(Q)
    loc = prob.localized(first, second, x)[j]
    inside = prob.idx.chains[x][j] == node
    h = np.where(inside, loc, 0.0) ** (r - 1.0)
    m = prob.mass[x]
    nrm = float(m @ h ** p) ** (1.0 / p)
    return h / nrm if nrm > 0 else h


@dataclass
class _Seeds:
    F1: np.ndarray
    F2: np.ndarray
    labels: list


def _seeds(prob: _Problem, tc: TestingConstants, cfg: OptimizerConfig) -> _Seeds:
    inst = prob.inst
    e = inst.exponents
    cols1, cols2, labels = [], [], []
    for Q in tc.T_cubes[: cfg.indicator_seeds]:
        cols1.append(_indicator(prob, 0, Q, e.p1))
        cols2.append(_indicator(prob, 1, Q, e.p2))
        labels.append(("T", Q))
    for Q in tc.T1_cubes[: cfg.dual_seeds]:
        cols1.append(_dual_profile(prob, 2, 1, 0, Q, e.p1c, e.p1))
        cols2.append(_indicator(prob, 1, Q, e.p2))
        labels.append(("T1", Q))
    for Q in tc.T2_cubes[: cfg.dual_seeds]:
        cols1.append(_indicator(prob, 0, Q, e.p1))
        cols2.append(_dual_profile(prob, 0, 2, 1, Q, e.p2c, e.p2))
        labels.append(("T2", Q))
    rng = np.random.default_rng(cfg.seed)
    n1, n2 = len(inst.sigma1), len(inst.sigma2)
    for r in range(cfg.restarts):
        a = rng.random(n1) + 1e-3
        b = rng.random(n2) + 1e-3
        cols1.append(a / float(inst.sigma1.masses @ a ** e.p1) ** (1 / e.p1))
        cols2.append(b / float(inst.sigma2.masses @ b ** e.p2) ** (1 / e.p2))
        labels.append(("random", r))
    F1 = np.array(cols1, dtype=float).reshape(len(cols1), n1).T
    F2 = np.array(cols2, dtype=float).reshape(len(cols2), n2).T
    return _Seeds(F1, F2, labels)


@dataclass
class NormEstimate:
    value: float
    start_values: np.ndarray  # objective at each seed before ascent
    final_values: np.ndarray
    labels: list
    F1: np.ndarray
    F2: np.ndarray
    iterations: int = 0


def _ascend_strong(prob: _Problem, F1, F2, cfg: OptimizerConfig):
    e = prob.inst.exponents
    m1, m2, mw = prob.mass
    q = e.q
    c = prob.c[:, None]
    obj = prob.strong(prob.values(F1, F2))
    it = 0
    for it in range(1, cfg.max_iter + 1):
        U = prob.A1 @ F1
        V = prob.A2 @ F2
        G = prob.B @ (c * U * V)
        H = prob.B.T @ (mw[:, None] * G ** (q - 1))
        N1 = _best_response(prob.A1.T @ (c * V * H), m1, e.p1, F1)
        U = prob.A1 @ N1
        G = prob.B @ (c * U * V)
        H = prob.B.T @ (mw[:, None] * G ** (q - 1))
        N2 = _best_response(prob.A2.T @ (c * U * H), m2, e.p2, F2)
        new = prob.strong(prob.values(N1, N2))
        better = new >= obj
        F1 = np.where(better[None, :], N1, F1)
        F2 = np.where(better[None, :], N2, F2)
        gain = np.where(better, new - obj, 0.0)
        obj = np.maximum(new, obj)
        if np.all(gain <= cfg.rtol * np.maximum(obj, ABS_TOL)):
            break
    return F1, F2, obj, it


def _ascend_weak(prob: _Problem, F1, F2, cfg: OptimizerConfig):
    """Alternating ascent on the weak norm through its extremal level set.

    With the level set E fixed, the best response maximizes int_E I dw, a
    linear function of each slot; the move is kept only if the weak norm
    itself does not drop.
    """
    e = prob.inst.exponents
    m1, m2, mw = prob.mass
    c = prob.c[:, None]
    obj, E = prob.weak(prob.values(F1, F2))
    for _ in range(cfg.weak_iter):
        H = prob.B.T @ (mw[:, None] * E)
        V = prob.A2 @ F2
        N1 = _best_response(prob.A1.T @ (c * V * H), m1, e.p1, F1)
        val1, E1 = prob.weak(prob.values(N1, F2))
        ok = val1 >= obj
        F1 = np.where(ok[None, :], N1, F1)
        E = np.where(ok[None, :], E1, E)
        mid = np.maximum(val1, obj)
        H = prob.B.T @ (mw[:, None] * E)
        U = prob.A1 @ F1
        N2 = _best_response(prob.A2.T @ (c * U * H), m2, e.p2, F2)
        val2, E2 = prob.weak(prob.values(F1, N2))
        ok = val2 >= mid
        F2 = np.where(ok[None, :], N2, F2)
        E = np.where(ok[None, :], E2, E)
        new = np.maximum(val2, mid)
        done = np.all(new - obj <= cfg.rtol * np.maximum(new, ABS_TOL))
        obj = new
        if done:
            break
    return F1, F2, obj


def _empty_estimate(prob: _Problem) -> NormEstimate:
    z = np.zeros(0)
    return NormEstimate(0.0, z, z, [], np.zeros((len(prob.inst.sigma1), 0)), np.zeros((len(prob.inst.sigma2), 0)))


def _strong(prob: _Problem, tc: TestingConstants, cfg: OptimizerConfig) -> NormEstimate:
    if not (len(prob.inst.sigma1) and len(prob.inst.sigma2) and len(prob.inst.w)):
        return _empty_estimate(prob)
    seeds = _seeds(prob, tc, cfg)
    start = prob.strong(prob.values(seeds.F1, seeds.F2))
    F1, F2, final, it = _ascend_strong(prob, seeds.F1, seeds.F2, cfg)
    return NormEstimate(float(final.max(initial=0.0)), start, final, seeds.labels, F1, F2, it)


def _weak(prob: _Problem, tc: TestingConstants, cfg: OptimizerConfig,
          strong: NormEstimate | None = None) -> NormEstimate:
    if not (len(prob.inst.sigma1) and len(prob.inst.sigma2) and len(prob.inst.w)):
        return _empty_estimate(prob)
    seeds = _seeds(prob, tc, cfg)
    F1, F2, labels = seeds.F1, seeds.F2, list(seeds.labels)
    if strong is not None:
        F1 = np.hstack([F1, strong.F1])
        F2 = np.hstack([F2, strong.F2])
        labels += [("strong",) + tuple(lab) for lab in strong.labels]
    start, _ = prob.weak(prob.values(F1, F2))
    F1, F2, final = _ascend_weak(prob, F1, F2, cfg)
    qc = prob.inst.exponents.qc
    # localized L^1 forms bound the weak norm from below after dividing by q'
    forms = max(tc.equi, tc.T1star, tc.T2star) / qc
    value = max(float(final.max(initial=0.0)), forms)
    return NormEstimate(value, start, final, labels, F1, F2)


def estimate_strong_norm(inst: Instance, config: OptimizerConfig | None = None) -> float:
    """Certified lower bound for the best strong-type constant."""
    cfg = config or OptimizerConfig()
    prob = _Problem(inst)
    return _strong(prob, _testing(prob), cfg).value


def estimate_weak_norm(inst: Instance, config: OptimizerConfig | None = None) -> float:
    """Certified lower bound for the best weak-type constant."""
    cfg = config or OptimizerConfig()
    prob = _Problem(inst)
    tc = _testing(prob)
    return _weak(prob, tc, cfg, _strong(prob, tc, cfg)).value


# -- exhaustive oracle -------------------------------------------------------

def _simplex_grid(d: int, resolution: int) -> np.ndarray:
    """All points of the simplex {s >= 0, sum s = 1} with coordinates in (1/resolution) Z."""
    if d == 1:
        return np.ones((1, 1))
    pts = [c for c in itertools.product(range(resolution + 1), repeat=d - 1) if sum(c) <= resolution]
    arr = np.array([list(c) + [resolution - sum(c)] for c in pts], dtype=float)
    return arr / resolution


@dataclass(frozen=True)
class OracleResult:
    value: float
    gap: float
    grid_points: tuple[int, int]


def exhaustive_norm_oracle(inst: Instance, resolution: int = 64, max_atoms: int = 3) -> OracleResult:
    """Grid search of the strong objective over both unit spheres.

    Unit vectors are ``f(a) = (s_a / m(a))^(1/p)`` for ``s`` on a simplex
    lattice.  Any sphere point is within ``(1/resolution)^(1/p)`` of the grid
    in these coordinates and the objective is monotone and bilinear, so the
    true supremum exceeds the grid maximum by at most
    ``gap = Phi(1, 1) * (d1 + d2)`` with ``Phi(1, 1)`` the objective at all
    coordinates equal to one.
    """
    e = inst.exponents
    n1, n2 = len(inst.sigma1), len(inst.sigma2)
    if n1 > max_atoms or n2 > max_atoms:
        raise ValueError("the exhaustive oracle only handles tiny measures")
    if not (n1 and n2 and len(inst.w)):
        return OracleResult(0.0, 0.0, (0, 0))
    prob = _Problem(inst)
    m1, m2, mw = prob.mass
    S1 = _simplex_grid(n1, resolution)
    S2 = _simplex_grid(n2, resolution)
    F1 = ((S1 / m1[None, :]) ** (1.0 / e.p1)).T
    F2 = ((S2 / m2[None, :]) ** (1.0 / e.p2)).T
    U = prob.A1 @ F1
    V = prob.A2 @ F2
    total = np.zeros((F1.shape[1], F2.shape[1]))
    for x in range(len(inst.w)):
        Gx = (U * (prob.B[x] * prob.c)[:, None]).T @ V
        total += mw[x] * Gx ** e.q
    best = float(total.max()) ** (1.0 / e.q)
    ones1 = (1.0 / m1) ** (1.0 / e.p1)
    ones2 = (1.0 / m2) ** (1.0 / e.p2)
    lam = float(prob.strong(prob.values(ones1[:, None], ones2[:, None]))[0])
    d1 = 0.0 if n1 == 1 else (1.0 / resolution) ** (1.0 / e.p1)
    d2 = 0.0 if n2 == 1 else (1.0 / resolution) ** (1.0 / e.p2)
    return OracleResult(best, lam * (d1 + d2), (F1.shape[1], F2.shape[1]))


# -- special case ------------------------------------------------------------

def special_case_probe(inst: Instance, Q: DyadicCube, f2) -> float:
    """(int_Q I^S(1_Q s1, 1_Q f2 s2)^q dw)^(1/q) / (s1(Q)^(1/p1) ||f2||_{L^p2(s2)}).

    Returns 0 when the denominator vanishes.
    """
    e = inst.exponents
    f2 = np.asarray(f2, dtype=float)
    ind1 = inst.sigma1.indicator(Q)
    ind2 = inst.sigma2.indicator(Q)
    s1Q = float(inst.sigma1.masses @ ind1)
    norm2 = float(inst.sigma2.masses @ np.abs(f2) ** e.p2) ** (1.0 / e.p2)
    if s1Q == 0 or norm2 == 0:
        return 0.0
    wQ = inst.w.restricted(Q)
    if not len(wQ):
        return 0.0
    vals = eval_sparse(inst.params, inst.S, ind1, inst.sigma1, f2 * ind2, inst.sigma2, wQ)
    lhs = float(wQ.masses @ vals ** e.q) ** (1.0 / e.q)
    return lhs / (s1Q ** (1.0 / e.p1) * norm2)


# -- verification ------------------------------------------------------------

@dataclass
class VerificationReport:
    T: float
    T1star: float
    T2star: float
    equi: float
    N_lower: float
    Nweak_lower: float
    N_exhaustive: float | None
    oracle_gap: float | None
    ratio_strong: float | None
    ratio_weak: float | None
    probe_ratio: float | None
    singular: bool
    sparse_ok: bool
    sparse_worst: str
    family_size: int
    checks: dict
    failures: list
    provenance: dict

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "T": self.T, "T1star": self.T1star, "T2star": self.T2star, "equi": self.equi,
            "N_lower": self.N_lower, "Nweak_lower": self.Nweak_lower,
            "N_exhaustive": self.N_exhaustive, "oracle_gap": self.oracle_gap,
            "ratio_strong": self.ratio_strong, "ratio_weak": self.ratio_weak,
            "probe_ratio": self.probe_ratio,
            "flags": {"singular": self.singular, "exhaustive_oracle": self.N_exhaustive is not None,
                      "ratios_undefined": self.ratio_strong is None},
            "sparse": {"ok": self.sparse_ok, "worst_ratio": self.sparse_worst, "cubes": self.family_size},
            "checks": self.checks, "failures": self.failures, "provenance": self.provenance,
        }


def _le(a: float, b: float) -> bool:
    return a <= b * (1 + REL_TOL) + ABS_TOL


def verify_theorem(inst: Instance, config: OptimizerConfig | None = None, oracle: bool | None = None,
                   oracle_resolution: int = 64) -> VerificationReport:
    """All constants of an instance plus the certified necessity checks.

    Certified: every testing ratio is beaten by an evaluated competitor, so
    ``T, T1*, T2* <= N_lower`` and ``T1*, T2* <= q' Nweak`` (the latter via
    Kolmogorov's inequality).  The converse ratios are only recorded.
    """
    cfg = config or OptimizerConfig()
    e = inst.exponents
    prob = _Problem(inst)
    tc = _testing(prob)
    strong = _strong(prob, tc, cfg)
    weak = _weak(prob, tc, cfg, strong)
    N_lower = max(strong.value, weak.value)
    checks: dict = {}
    failures: list = []

    def record(name: str, ok: bool, detail: str = ""):
        checks[name] = bool(ok)
        if not ok:
            failures.append({"check": name, "detail": detail})

    sparse_ok, worst = verify_sparsity(inst.S)
    record("sparsity", sparse_ok, "" if sparse_ok else f"worst ratio {worst}")

    def competitor(kind: str, est: NormEstimate) -> float:
        vals = [v for lab, v in zip(est.labels, est.final_values) if lab[0] == kind]
        return max(vals, default=0.0)

    if strong.labels:
        record("T<=N", _le(tc.T, competitor("T", strong)), f"T={tc.T!r}")
        record("T1*<=N", _le(tc.T1star, competitor("T1", strong)), f"T1*={tc.T1star!r}")
        record("T2*<=N", _le(tc.T2star, competitor("T2", strong)), f"T2*={tc.T2star!r}")
        record("T1*<=q'Nweak", _le(tc.T1star, e.qc * competitor("T1", weak)), f"T1*={tc.T1star!r}")
        record("T2*<=q'Nweak", _le(tc.T2star, e.qc * competitor("T2", weak)), f"T2*={tc.T2star!r}")
        ws, _ = prob.weak(prob.values(strong.F1, strong.F2))
        record("weak<=strong", bool(np.all(ws <= strong.final_values * (1 + REL_TOL) + ABS_TOL)))

    N_ex = gap = None
    use_oracle = oracle if oracle is not None else max(len(inst.sigma1), len(inst.sigma2)) <= 3
    if use_oracle and len(inst.sigma1) <= 3 and len(inst.sigma2) <= 3:
        res = exhaustive_norm_oracle(inst, oracle_resolution)
        N_ex, gap = res.value, res.gap
        record("oracle", abs(N_lower - N_ex) <= gap + ABS_TOL, f"N_lower={N_lower!r} N_exhaustive={N_ex!r}")

    probe = None
    if tc.T_cubes:
        Q = tc.T_cubes[0]
        probe = special_case_probe(inst, Q, inst.sigma2.indicator(Q))

    tsum = tc.T + tc.T1star + tc.T2star
    dsum = tc.T1star + tc.T2star
    prov = {
        "seed": inst.seed, "delta": inst.delta, "window": inst.window.as_dict(), "shift": list(inst.shift),
        "tolerances": {"relative": REL_TOL, "absolute": ABS_TOL},
        "optimizer": {"restarts": cfg.restarts, "max_iter": cfg.max_iter, "rtol": cfg.rtol, "seed": cfg.seed},
        "n": inst.params.n, "alpha": inst.params.alpha, "exponents": e.as_dict(),
        "outside_hypotheses": e.outside_hypotheses,
        "atoms": [len(inst.sigma1), len(inst.sigma2), len(inst.w)],
    }
    return VerificationReport(
        T=tc.T, T1star=tc.T1star, T2star=tc.T2star, equi=tc.equi,
        N_lower=N_lower, Nweak_lower=weak.value, N_exhaustive=N_ex, oracle_gap=gap,
        ratio_strong=N_lower / tsum if tsum > 0 else None,
        ratio_weak=weak.value / dsum if dsum > 0 else None,
        probe_ratio=probe, singular=inst.singular, sparse_ok=sparse_ok, sparse_worst=str(worst),
        family_size=len(inst.S), checks=checks, failures=failures, provenance=prov,
    )


def kernel_testing_lower(inst: Instance, shifts=None) -> float:
    """Strong testing ratio of the kernel operator, maximized over grid cubes.

    Every grid cube is a cube, so this is a lower bound for the supremum over
    all cubes.  Scales follow the instance window.
    """
    from .geometry import all_shifts
    from .operators import eval_kernel

    e = inst.exponents
    best = 0.0
    for t in shifts if shifts is not None else all_shifts(inst.params.n):
        idx = CubeIndex(t, inst.window.k_top, inst.window.k_max,
                        [inst.sigma1.points, inst.sigma2.points, inst.w.points])
        s1, s2, w = (idx.node_sum(i, mu.masses) for i, mu in enumerate((inst.sigma1, inst.sigma2, inst.w)))
        for node in np.nonzero((s1 > 0) & (s2 > 0) & (w > 0))[0]:
            Q = idx.cube(int(node))
            wQ = inst.w.restricted(Q)
            vals = eval_kernel(inst.params, inst.sigma1.indicator(Q), inst.sigma1,
                               inst.sigma2.indicator(Q), inst.sigma2, wQ)
            num = float(wQ.masses @ vals ** e.q) ** (1 / e.q)
            best = max(best, num / (s1[node] ** (1 / e.p1) * s2[node] ** (1 / e.p2)))
    return best
