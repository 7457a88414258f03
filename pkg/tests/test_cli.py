import io
import json
import subprocess
import sys

import pytest

from ecdsheaf import cli
from ecdsheaf import qmod as qm
from ecdsheaf.zoo import build_fixture


def run(*argv):
    out = io.StringIO()
    code = cli.run(list(argv), stdout=out)
    return code, out.getvalue()


def write_presheaf(tmp_path, fixture, X, sheafify=False, name="F.json"):
    fx = build_fixture(fixture)
    F = qm.free_linear(fx.cat, X)
    if sheafify:
        F = qm.sheafify_linear(F, fx.t).sheaf
    p = tmp_path / name
    p.write_text(F.dumps())
    return str(p)


@pytest.fixture
def z3_files(tmp_path):
    code, _ = run("fixture", "Z3", "--emit", "--out", str(tmp_path / "z3"))
    assert code == cli.OK
    return {k: str(tmp_path / "z3" / f"{k}.json") for k in ("site", "ecd", "density", "presheaf")}


def test_fixture_emit_then_check_from_files(z3_files):
    code, out = run("check-ecd", "--site", z3_files["site"], "--ecd", z3_files["ecd"],
                    "--density", z3_files["density"], "--complete", "--regular", "--bounded")
    assert code == cli.OK
    assert "bounded: yes" in out


def test_validate_and_topology(z3_files):
    assert run("validate", "--site", z3_files["site"], "--ecd", z3_files["ecd"])[0] == cli.OK
    code, out = run("topology", "--site", z3_files["site"], "--ecd", z3_files["ecd"])
    assert code == cli.OK and "{U<S, UV<S, V<S, empty<S}" in out


def test_sheafify_writes_output(tmp_path, z3_files):
    out_path = tmp_path / "aF.json"
    code, out = run("sheafify", "--fixture", "Z3", "--presheaf", z3_files["presheaf"], "--out", str(out_path))
    assert code == cli.OK
    cat = build_fixture("Z3").cat
    aF = qm.QPresheaf.from_dict(cat, json.loads(out_path.read_text()))
    assert aF.dim["empty"] == 0 and aF.dim["S"] == 1


def test_cohomology_table(tmp_path):
    p = write_presheaf(tmp_path, "Z3", "S", sheafify=True)
    code, out = run("cohomology", "--fixture", "Z3", "--presheaf", p, "--object", "S", "--format", "json")
    assert code == cli.OK
    rep = json.loads(out)["report"]
    assert rep["table"]["S"] == [1, 0, 0, 0] and rep["max_degree"] == 3


def test_max_degree_environment(tmp_path, monkeypatch):
    p = write_presheaf(tmp_path, "GS", "pt", sheafify=True)
    monkeypatch.setenv("ECDSHEAF_MAX_DEGREE", "1")
    _, out = run("cohomology", "--fixture", "GS", "--presheaf", p, "--object", "pt", "--format", "json")
    assert json.loads(out)["report"]["table"]["pt"] == [1, 0]
    monkeypatch.setenv("ECDSHEAF_MAX_DEGREE", "4")
    _, out = run("cohomology", "--fixture", "GS", "--presheaf", p, "--object", "pt", "--format", "json")
    assert json.loads(out)["report"]["table"]["pt"] == [1, 0, 0, 0, 0]


def test_descent_square_failure(tmp_path):
    p = write_presheaf(tmp_path, "Z3", "UV")
    code, out = run("check-descent", "--theorem", "2.3", "--fixture", "Z3", "--presheaf", p)
    assert code == cli.FAILED
    assert "Zar" in out and "no" in out


def test_descent_success(tmp_path):
    p = write_presheaf(tmp_path, "Z3", "S", sheafify=True)
    code, _ = run("check-descent", "--theorem", "2.3", "--fixture", "Z3", "--presheaf", p)
    assert code == cli.OK


def test_union_theorem(tmp_path):
    p = write_presheaf(tmp_path, "GS+", "pt", sheafify=True)
    code, out = run("check-descent", "--theorem", "2.16", "--fixture", "GS+", "--presheaf", p)
    assert code == cli.OK and "agreement: True" in out


@pytest.mark.parametrize("X,sheafify", [("UV", False), ("S", True), ("U", False)])
def test_text_and_json_agree(tmp_path, X, sheafify):
    p = write_presheaf(tmp_path, "Z3", X, sheafify)
    args = ["check-descent", "--theorem", "2.3", "--fixture", "Z3", "--presheaf", p]
    code_t, text = run(*args)
    code_j, js = run(*args, "--format", "json")
    assert code_t == code_j
    rep = json.loads(js)
    assert rep["command"] == "check-descent"
    for name, ok in rep["report"]["squares"].items():
        assert any(line.split() == [name, "yes" if ok else "no"] for line in text.splitlines())
    assert f"agreement: {rep['report']['agreement']}" in text


def test_input_errors(tmp_path):
    assert run("fixture", "NOPE")[0] == cli.INPUT_ERROR
    assert run("validate", "--site", str(tmp_path / "missing.json"))[0] == cli.INPUT_ERROR
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("validate", "--site", str(bad))[0] == cli.INPUT_ERROR
    assert run("cohomology", "--fixture", "GS")[0] == cli.INPUT_ERROR


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ecdsheaf", "fixture", "GS"], capture_output=True, text=True)
    assert r.returncode == 0 and "GS" in r.stdout
