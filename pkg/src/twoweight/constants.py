"""Derived constants and the frozen calibration file.

Derived constants come straight from their inequalities.  Calibrated ones
(C2 per (n, alpha), R_max per configuration) are measured over a declared
seeded batch by :func:`calibrate` and stored in ``data/constants.json``.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import all_shifts
from .generate import random_measures
from .operators import (OperatorParams, TruncationWindow, eval_dyadic, eval_kernel, pointwise_lower_constant,
                        pointwise_upper_constant)
from .sparse import domination_constant

# (n, alpha) pairs with a frozen C2
POINTWISE_PAIRS = [(1, 0.5), (1, 1.0), (2, 0.5), (2, 1.0), (2, 2.0)]
EXPONENTS = [(2.0, 2.0, 2.0), (1.5, 3.0, 3.0), (2.0, 2.0, 4.0)]
# sweep configurations: n in {1, 2}, alpha in {0.5, 1}, three exponent tuples
CONFIGS = [(n, a, *e) for n in (1, 2) for a in (0.5, 1.0) for e in EXPONENTS]

# declared calibration batch
CALIBRATION_SEEDS = range(500)
CALIBRATION_ATOMS = (4, 4, 4)
C2_SEEDS = range(1000)
C2_ATOMS = (4, 4, 4)
C2_MARGIN = 1.25
POINTWISE_WINDOW = TruncationWindow(-3, 12)


def config_key(n: int, alpha: float, p1: float, p2: float, q: float) -> str:
    return f"n={n} alpha={float(alpha):g} p=({float(p1):g},{float(p2):g},{float(q):g})"


def pair_key(n: int, alpha: float) -> str:
    return f"n={n} alpha={float(alpha):g}"


def constants_path() -> Path:
    return Path(str(resources.files("twoweight").joinpath("data", "constants.json")))


@lru_cache(maxsize=None)
def _frozen(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        return {"C2": {}, "R_max": {}, "Rweak_max": {}}
    return json.loads(p.read_text())


def frozen_constants(path=None) -> dict:
    return _frozen(str(path or constants_path()))


def c2(n: int, alpha: float, path=None) -> float | None:
    return frozen_constants(path)["C2"].get(pair_key(n, alpha))


def r_max(n, alpha, p1, p2, q, path=None) -> tuple[float | None, float | None]:
    key = config_key(n, alpha, p1, p2, q)
    data = frozen_constants(path)
    return data["R_max"].get(key), data["Rweak_max"].get(key)


def report_constants(n: int, alpha: float, p1: float, p2: float, q: float) -> dict:
    params = OperatorParams(n, alpha)
    rs, rw = r_max(n, alpha, p1, p2, q)
    return {"C1": pointwise_upper_constant(params), "C2": c2(n, alpha), "C2_derived": pointwise_lower_constant(params),
            "C_dom": domination_constant(params), "R_max": rs, "Rweak_max": rw}


def pointwise_sample(n: int, alpha: float, seed: int, atoms=C2_ATOMS):
    """Kernel and dyadic values at the w atoms of one seeded instance.

    Returns (kernel, dyadic in the standard grid, sum over all grids).
    """
    params = OperatorParams(n, alpha)
    rng = np.random.default_rng(seed)
    s1, s2, w = random_measures(rng, n, atoms)
    f1 = rng.random(len(s1))
    f2 = rng.random(len(s2))
    K = eval_kernel(params, f1, s1, f2, s2, w)
    D = [eval_dyadic(params, t, POINTWISE_WINDOW, f1, s1, f2, s2, w) for t in all_shifts(n)]
    return K, D[0], np.sum(D, axis=0)


def calibrate_c2(n: int, alpha: float, seeds=C2_SEEDS) -> dict:
    worst = 0.0
    for s in seeds:
        K, _, total = pointwise_sample(n, alpha, s)
        worst = max(worst, float(np.max(K / total)))
    derived = pointwise_lower_constant(OperatorParams(n, alpha))
    return {"observed": worst, "frozen": min(derived, C2_MARGIN * worst), "derived": derived}


def calibrate(path=None, jobs: int = 1, seeds: range = CALIBRATION_SEEDS, c2_seeds: range = C2_SEEDS) -> dict:
    """Measure C2 and R_max over the declared batch and write the constants file."""
    from .batch import run_sweep

    out = {"C2": {}, "C2_observed": {}, "R_max": {}, "Rweak_max": {},
           "batch": {"seeds": [seeds.start, seeds.stop],
                     "atoms": list(CALIBRATION_ATOMS), "c2_seeds": [c2_seeds.start, c2_seeds.stop],
                     "c2_atoms": list(C2_ATOMS), "c2_margin": C2_MARGIN}}
    for n, a in POINTWISE_PAIRS:
        res = calibrate_c2(n, a, c2_seeds)
        out["C2"][pair_key(n, a)] = res["frozen"]
        out["C2_observed"][pair_key(n, a)] = res["observed"]
    for cfg in CONFIGS:
        rows = run_sweep(seeds, cfg, CALIBRATION_ATOMS, jobs=jobs)
        key = config_key(*cfg)
        out["R_max"][key] = max(r["ratio_strong"] for r in rows if r["ratio_strong"] is not None)
        out["Rweak_max"][key] = max(r["ratio_weak"] for r in rows if r["ratio_weak"] is not None)
    target = Path(path or constants_path())
    target.write_text(json.dumps(out, sort_keys=True, indent=2) + "\n")
    _frozen.cache_clear()
    return out
