import csv
import io
import json

import pytest
from click.testing import CliRunner

from twoweight.cli import main
from twoweight.constants import calibrate, frozen_constants
from twoweight.serialize import demo_path, validate_report


@pytest.fixture
def runner():
    return CliRunner()


def test_verify_demo(runner):
    res = runner.invoke(main, ["verify", str(demo_path())])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    validate_report(doc)
    assert doc["report"]["T"] == 3
    assert doc["report"]["ratio_strong"] == pytest.approx(1 / 3)
    assert doc["wall_ms"] is None
    assert doc["constants"]["C_dom"] > 0


def test_verify_timing(runner):
    res = runner.invoke(main, ["verify", str(demo_path()), "--timing"])
    assert res.exit_code == 0
    assert json.loads(res.output)["wall_ms"] >= 0


@pytest.mark.parametrize("text", ["{not json", "[]", '{"n": 1}'])
def test_malformed_file(runner, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    res = runner.invoke(main, ["verify", str(path)])
    assert res.exit_code == 1


def test_missing_file(runner, tmp_path):
    assert runner.invoke(main, ["verify", str(tmp_path / "none.json")]).exit_code == 1


def _demo_doc():
    return json.loads(demo_path().read_text())


def test_invalid_exponents(runner, tmp_path):
    doc = _demo_doc()
    doc.update(p1=3.0, p2=3.0, q=3.0)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(doc))
    assert runner.invoke(main, ["verify", str(path)]).exit_code == 1
    assert runner.invoke(main, ["verify", str(path), "--force-exponents"]).exit_code == 0


def test_sparsity_violation(runner, tmp_path):
    doc = _demo_doc()
    doc["sparse"] = [{"k": 0, "m": [0]}, {"k": 1, "m": [0]}, {"k": 1, "m": [1]}]
    path = tmp_path / "dense.json"
    path.write_text(json.dumps(doc))
    res = runner.invoke(main, ["verify", str(path)])
    assert res.exit_code == 2
    failures = json.loads(res.output)["report"]["failures"]
    cube = [f for f in failures if "cube" in f][0]["cube"]
    assert cube["interval"] == "[0,1)"


def test_singular(runner, tmp_path):
    doc = _demo_doc()
    doc["w"] = [{"point": ["1/10"], "mass": 1.0}]
    path = tmp_path / "sing.json"
    path.write_text(json.dumps(doc))
    assert runner.invoke(main, ["verify", str(path)]).exit_code == 3
    res = runner.invoke(main, ["verify", str(path), "--allow-singular"])
    assert res.exit_code in (0, 2)
    assert json.loads(res.output)["report"]["flags"]["singular"]


def test_gen_deterministic_and_verifiable(runner, tmp_path):
    a = runner.invoke(main, ["gen", "--seed", "42", "--n", "2"]).output
    b = runner.invoke(main, ["gen", "--seed", "42", "--n", "2"]).output
    assert a == b
    doc = json.loads(a)
    assert [len(doc[k]) for k in ("sigma1", "sigma2", "w")] == [8, 8, 8]
    pts = [tuple(x["point"]) for k in ("sigma1", "sigma2", "w") for x in doc[k]]
    assert len(set(pts)) == len(pts)
    assert all(x["mass"] > 0 for k in ("sigma1", "sigma2", "w") for x in doc[k])
    path = tmp_path / "g.json"
    path.write_text(a)
    first = runner.invoke(main, ["verify", str(path)])
    assert first.exit_code == 0
    assert first.output == runner.invoke(main, ["verify", str(path)]).output


def test_gen_rejects_exponents(runner):
    assert runner.invoke(main, ["gen", "--seed", "1", "--p1", "3", "--p2", "3", "--q", "3"]).exit_code == 1
    assert runner.invoke(main, ["gen", "--seed", "1", "--atoms", "1,2"]).exit_code != 0


def test_sweep_rows(runner):
    res = runner.invoke(main, ["sweep", "--seed", "10", "--count", "7", "--atoms", "4,4,4"])
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert [int(r["seed"]) for r in rows] == list(range(10, 17))
    assert list(rows[0]) == ["seed", "n", "alpha", "p1", "p2", "q", "atoms", "T", "T1star", "T2star", "N_lower",
                             "Nweak_lower", "ratio_strong", "ratio_weak", "wall_ms"]
    assert all(r["wall_ms"] == "" for r in rows)


def test_sweep_parallel_matches(runner):
    args = ["sweep", "--seed", "0", "--count", "6", "--atoms", "3,3,3", "--n", "2"]
    assert runner.invoke(main, args).output == runner.invoke(main, args + ["--jobs", "3"]).output


def test_oracle_command(runner):
    res = runner.invoke(main, ["oracle", "--count", "3", "--resolution", "16"])
    assert res.exit_code == 0, res.output
    assert len(res.output.strip().splitlines()) == 4


def test_calibrate_idempotent(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    calibrate(a, seeds=range(4), c2_seeds=range(6))
    calibrate(b, seeds=range(4), c2_seeds=range(6))
    assert a.read_bytes() == b.read_bytes()
    assert frozen_constants(a)["batch"]["seeds"] == [0, 4]


@pytest.mark.slow
def test_calibrate_reproduces_shipped(tmp_path):
    from twoweight.constants import constants_path

    out = tmp_path / "c.json"
    calibrate(out, jobs=4)
    assert out.read_bytes() == constants_path().read_bytes()
