"""Seeded sweeps over instance configurations."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from threadpoolctl import threadpool_limits

from .generate import gen_instance
from .testing import verify_theorem

CSV_COLUMNS = ["seed", "n", "alpha", "p1", "p2", "q", "atoms", "T", "T1star", "T2star", "N_lower",
               "Nweak_lower", "ratio_strong", "ratio_weak", "wall_ms"]


def sweep_row(seed: int, config, atoms, timing: bool = False, k_min: int = -10, k_max: int = 12,
              delta: float = 0.25, force: bool = False) -> dict:
    n, alpha, p1, p2, q = config
    start = time.perf_counter()
    inst = gen_instance(seed, n, atoms, alpha, p1, p2, q, k_min=k_min, k_max=k_max, delta=delta, force=force)
    rep = verify_theorem(inst, oracle=False)
    elapsed = (time.perf_counter() - start) * 1000.0
    return {
        "seed": seed, "n": n, "alpha": alpha, "p1": p1, "p2": p2, "q": q,
        "atoms": ",".join(str(a) for a in atoms),
        "T": rep.T, "T1star": rep.T1star, "T2star": rep.T2star,
        "N_lower": rep.N_lower, "Nweak_lower": rep.Nweak_lower,
        "ratio_strong": rep.ratio_strong, "ratio_weak": rep.ratio_weak,
        "wall_ms": round(elapsed, 3) if timing else None,
        "failures": rep.failures,
    }


def _row(args):
    return sweep_row(*args)


def _single_threaded():
    # BLAS threading must not change reduction orders inside a worker
    threadpool_limits(1)


def run_sweep(seeds, config, atoms, jobs: int = 1, timing: bool = False, **kw) -> list[dict]:
    """Rows in seed order whatever the number of workers."""
    items = [(s, tuple(config), tuple(atoms), timing, kw.get("k_min", -10), kw.get("k_max", 12),
              kw.get("delta", 0.25), kw.get("force", False)) for s in seeds]
    if jobs <= 1:
        with threadpool_limits(1):
            return [_row(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_single_threaded) as pool:
        return list(pool.map(_row, items, chunksize=8))


def oracle_config(seed: int):
    """Configuration and atom counts (each in {1, 2, 3}) of a tiny oracle instance."""
    from .constants import CONFIGS

    rng = np.random.default_rng([seed, 3])
    config = CONFIGS[int(rng.integers(len(CONFIGS)))]
    atoms = tuple(int(v) for v in rng.integers(1, 4, size=3))
    return config, atoms


def oracle_rows(seeds, resolution: int = 64) -> list[dict]:
    rows = []
    with threadpool_limits(1):
        for s in seeds:
            config, atoms = oracle_config(s)
            inst = gen_instance(s, config[0], atoms, *config[1:])
            rep = verify_theorem(inst, oracle=True, oracle_resolution=resolution)
            rows.append({
                "seed": s, "n": config[0], "alpha": config[1], "p1": config[2], "p2": config[3], "q": config[4],
                "atoms": "-".join(str(a) for a in atoms), "N_lower": rep.N_lower,
                "N_exhaustive": rep.N_exhaustive, "gap": rep.oracle_gap,
                "ok": abs(rep.N_lower - rep.N_exhaustive) <= rep.oracle_gap + 1e-12,
            })
    return rows
