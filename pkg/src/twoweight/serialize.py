"""JSON instance and report files.

Coordinates are exact fraction strings so the rational geometry round-trips;
masses and reals are plain JSON numbers.  Output is written with sorted keys
so equal content gives equal bytes.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .geometry import DyadicCube, make_shift, standard_shift
from .measure import DiscreteMeasure, validate_exponents
from .operators import OperatorParams, TruncationWindow
from .sparse import SparseFamily
from .testing import Instance


class InstanceFileError(ValueError):
    """The file is not a valid instance description."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("twoweight").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def demo_path() -> Path:
    return Path(str(resources.files("twoweight").joinpath("data", "demo_single_atom.json")))


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _measure_doc(mu: DiscreteMeasure) -> list:
    return [{"point": [_frac(c) for c in p], "mass": float(m)} for p, m in zip(mu.points, mu.masses)]


def _cube_doc(c: DyadicCube, with_shift: bool = True) -> dict:
    d = {"k": c.k, "m": list(c.m)}
    if with_shift:
        d["shift"] = list(c.shift)
    return d


def instance_to_dict(inst: Instance, include_family: bool = False) -> dict:
    e = inst.exponents
    doc = {
        "n": inst.params.n, "alpha": inst.params.alpha, "p1": e.p1, "p2": e.p2, "q": e.q,
        "sigma1": _measure_doc(inst.sigma1), "sigma2": _measure_doc(inst.sigma2), "w": _measure_doc(inst.w),
        "shift": list(inst.shift), "window": inst.window.as_dict(), "delta": inst.delta,
    }
    if inst.seed is not None:
        doc["seed"] = inst.seed
    if include_family:
        doc["sparse"] = [_cube_doc(c, False) for c in inst.S.cubes]
    return doc


def _parse_measure(items: list, n: int) -> DiscreteMeasure:
    pts = [tuple(Fraction(c) for c in a["point"]) for a in items]
    if any(len(p) != n for p in pts):
        raise InstanceFileError(f"atom dimension differs from n={n}")
    return DiscreteMeasure(pts, [a["mass"] for a in items], n=n)


def _parse_cube(d: dict, shift) -> DyadicCube:
    sh = make_shift(d["shift"]) if "shift" in d else shift
    return DyadicCube(int(d["k"]), tuple(int(v) for v in d["m"]), sh)


def instance_from_dict(doc: dict, force_exponents: bool = False) -> Instance:
    try:
        jsonschema.validate(doc, load_schema("instance"))
    except jsonschema.ValidationError as err:
        raise InstanceFileError(f"schema violation at {list(err.absolute_path)}: {err.message}") from None
    n = doc["n"]
    try:
        params = OperatorParams(n, float(doc["alpha"]))
        exps = validate_exponents(doc["p1"], doc["p2"], doc["q"], force=force_exponents)
        shift = make_shift(doc["shift"]) if "shift" in doc else standard_shift(n)
        if len(shift) != n:
            raise InstanceFileError("shift dimension differs from n")
        measures = [_parse_measure(doc[key], n) for key in ("sigma1", "sigma2", "w")]
        window = None
        if "window" in doc:
            wd = doc["window"]
            root = wd.get("root")
            window = TruncationWindow(wd["k_min"], wd["k_max"], _parse_cube(root, shift) if root else None)
        S = None
        if "sparse" in doc:
            S = SparseFamily.of([_parse_cube(c, shift) for c in doc["sparse"]], shift)
        return Instance.build(params, exps, *measures, shift=shift, window=window, S=S,
                              delta=float(doc.get("delta", 0.25)), seed=doc.get("seed"))
    except InstanceFileError:
        raise
    except ValueError as err:
        raise InstanceFileError(str(err)) from None


def load_instance(path, force_exponents: bool = False) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise InstanceFileError(f"cannot read {path}: {err}") from None
    if not isinstance(doc, dict):
        raise InstanceFileError("instance file must hold a JSON object")
    return instance_from_dict(doc, force_exponents)


def _finite(obj):
    """Replace non-finite floats by strings so the output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _finite(obj.item())
    return obj


def dumps(doc) -> str:
    return json.dumps(_finite(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, load_schema("report"))
