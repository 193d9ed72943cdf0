"""Command line: generate instances, verify them, run sweeps and calibrate.

Exit codes: 0 success, 1 unreadable or invalid input, 2 a certified check
failed, 3 singular instance (without ``--allow-singular``).
"""
from __future__ import annotations

import csv
import io
import sys
import time
from pathlib import Path

import click
from threadpoolctl import threadpool_limits

from . import __version__
from .batch import CSV_COLUMNS, run_sweep
from .constants import calibrate as run_calibration
from .constants import report_constants
from .generate import gen_instance
from .serialize import InstanceFileError, dumps, instance_to_dict, load_instance
from .sparse import worst_cube
from .testing import verify_theorem

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_SINGULAR = 0, 1, 2, 3


def _atoms(ctx, param, value):
    try:
        parts = tuple(int(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter("expected three integers A,B,C") from None
    if len(parts) != 3 or min(parts) < 0:
        raise click.BadParameter("expected three nonnegative integers A,B,C")
    return parts


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def instance_options(f):
    opts = [
        click.option("--n", "n", type=int, default=1, show_default=True, help="Dimension."),
        click.option("--alpha", type=float, default=1.0, show_default=True),
        click.option("--p1", type=float, default=2.0, show_default=True),
        click.option("--p2", type=float, default=2.0, show_default=True),
        click.option("--q", type=float, default=2.0, show_default=True),
        click.option("--atoms", default="8,8,8", callback=_atoms, show_default=True,
                     help="Atom counts of sigma1, sigma2, w."),
        click.option("--kmin", type=int, default=-10, show_default=True),
        click.option("--kmax", type=int, default=12, show_default=True),
        click.option("--delta", type=float, default=0.25, show_default=True),
        click.option("--force-exponents", is_flag=True, help="Accept exponents outside the hypotheses."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@click.group()
@click.version_option(__version__)
def main():
    """Two-weight testing toolkit for bilinear fractional integrals."""


@main.command()
@click.option("--seed", type=int, required=True)
@instance_options
@click.option("--spread", type=int, default=1, show_default=True, help="Atoms lie in [0, spread)^n.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def gen(seed, n, alpha, p1, p2, q, atoms, kmin, kmax, delta, force_exponents, spread, out):
    """Write a seeded random instance file."""
    try:
        inst = gen_instance(seed, n, atoms, alpha, p1, p2, q, spread=spread, k_min=kmin, k_max=kmax,
                            delta=delta, force=force_exponents)
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_INPUT)
    _emit(dumps(instance_to_dict(inst)), out)


def build_report(inst, timing: bool = False, oracle=None, wall_ms=None) -> dict:
    rep = verify_theorem(inst, oracle=oracle)
    body = rep.as_dict()
    if not rep.sparse_ok:
        cube = worst_cube(inst.S)
        body["failures"] = body["failures"] + [{"check": "sparsity", "cube": {
            "k": cube.k, "m": list(cube.m), "shift": list(cube.shift), "interval": str(cube)}}]
    e = inst.exponents
    return {
        "version": __version__,
        "report": body,
        "constants": report_constants(inst.params.n, inst.params.alpha, e.p1, e.p2, e.q),
        "wall_ms": wall_ms if timing else None,
    }


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--allow-singular", is_flag=True)
@click.option("--force-exponents", is_flag=True)
@click.option("--oracle/--no-oracle", default=None, help="Exhaustive oracle (default: when measures are tiny).")
@click.option("--timing", is_flag=True, help="Record wall time (breaks byte-identical reruns).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def verify(instance, allow_singular, force_exponents, oracle, timing, out):
    """Verify one instance file and write its report."""
    try:
        inst = load_instance(instance, force_exponents=force_exponents)
    except InstanceFileError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_INPUT)
    if inst.singular and not allow_singular:
        click.echo("error: singular instance (a point carries all three measures)", err=True)
        sys.exit(EXIT_SINGULAR)
    start = time.perf_counter()
    with threadpool_limits(1):
        doc = build_report(inst, timing, oracle)
    if timing:
        doc["wall_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
    _emit(dumps(doc), out)
    sys.exit(EXIT_CHECK if doc["report"]["failures"] else EXIT_OK)


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if r[k] is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                         for k in CSV_COLUMNS})
    return buf.getvalue()


@main.command()
@click.option("--seed", type=int, default=0, show_default=True, help="First seed.")
@click.option("--count", type=int, default=100, show_default=True, help="Batch size.")
@instance_options
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--timing", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def sweep(seed, count, n, alpha, p1, p2, q, atoms, kmin, kmax, delta, force_exponents, jobs, timing, out):
    """Verify a seeded batch and write one CSV row per seed."""
    try:
        rows = run_sweep(range(seed, seed + count), (n, alpha, p1, p2, q), atoms, jobs=jobs, timing=timing,
                         k_min=kmin, k_max=kmax, delta=delta, force=force_exponents)
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_INPUT)
    _emit(_csv(rows), out)
    bad = [r["seed"] for r in rows if r["failures"]]
    if bad:
        click.echo(f"certified checks failed for seeds {bad}", err=True)
        sys.exit(EXIT_CHECK)


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Constants file (default: the packaged one).")
@click.option("--jobs", type=int, default=1, show_default=True)
def calibrate(out, jobs):
    """Measure C2 and R_max over the declared batch and freeze them."""
    data = run_calibration(out, jobs=jobs)
    for key, val in sorted(data["C2"].items()):
        click.echo(f"C2 {key}: {val!r}")
    for key in sorted(data["R_max"]):
        click.echo(f"R_max {key}: {data['R_max'][key]!r} weak {data['Rweak_max'][key]!r}")


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=100, show_default=True)
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def oracle(seed, count, resolution, out):
    """Compare the optimizer with exhaustive search on tiny instances."""
    from .batch import oracle_rows

    rows = oracle_rows(range(seed, seed + count), resolution)
    lines = ["seed,n,alpha,p1,p2,q,atoms,N_lower,N_exhaustive,gap,ok"]
    for r in rows:
        lines.append(",".join(str(r[k]) if not isinstance(r[k], float) else repr(r[k])
                              for k in ("seed", "n", "alpha", "p1", "p2", "q", "atoms", "N_lower",
                                        "N_exhaustive", "gap", "ok")))
    _emit("\n".join(lines) + "\n", out)
    if not all(r["ok"] for r in rows):
        sys.exit(EXIT_CHECK)


if __name__ == "__main__":
    main()
