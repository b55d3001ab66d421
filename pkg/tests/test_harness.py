import json

import numpy as np
import pytest

from capmod import Report, run_suite, study_refine_1d, study_refine_2d
from capmod.cli import main
from capmod.studies import scenario_capae_vs_dcap, scenario_dominated_convergence_failure


def test_report_aggregate_and_serialisation():
    r = Report("demo", "anchor text", {"b": 2, "a": np.int64(1)})
    r.close("x", 1.0, 1.0, 0.0)
    assert r.passed
    r.at_most("y", 2.0, 1.0)
    assert not r.passed and [c.name for c in r.failures()] == ["y"]
    obj = json.loads(r.to_json())
    assert obj["schema"] == "capmod/report/1" and obj["anchor"] == "anchor text"
    assert "runtime" not in obj and "runtime" in json.loads(r.to_json(timing=True))
    assert list(obj) == sorted(obj)
    assert r.to_csv().splitlines()[0] == "scenario,check,expected,actual,tolerance,passed"


def test_suite_is_deterministic(tmp_path):
    a = run_suite("capacity", seed=7, report_path=tmp_path / "a.json")
    b = run_suite("capacity", seed=7, report_path=tmp_path / "b.json")
    assert a.passed
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_suite_errors(tmp_path):
    with pytest.raises(ValueError, match="axioms"):
        run_suite("nope")
    with pytest.raises(OSError):
        run_suite("axioms", report_path=tmp_path / "missing" / "r.json")


def test_study_validation():
    with pytest.raises(ValueError):
        study_refine_2d([16, 16])
    with pytest.raises(ValueError):
        study_refine_1d(L=2.0)
    with pytest.raises(ValueError):
        scenario_dominated_convergence_failure(n=50, count=10)


def test_small_studies():
    r = study_refine_1d(L=5, n_list=[101, 201, 401])
    assert r.passed, r.summary()
    assert r.anchor
    r = study_refine_2d([8, 16, 32])
    assert r.passed, r.summary()
    assert scenario_dominated_convergence_failure(n=401, count=8).passed
    assert scenario_capae_vs_dcap(n=401, count=8).passed


@pytest.fixture
def files(tmp_path):
    space = {"vertices": [{"id": "a", "mass": 1}, {"id": "b", "mass": 0}, {"id": "c", "mass": 1}],
             "edges": [{"u": "a", "v": "b", "w": 1}, {"u": "b", "v": "c", "w": 1}]}
    (tmp_path / "s.json").write_text(json.dumps(space))
    (tmp_path / "f.json").write_text(json.dumps({"a": 1, "b": 0, "c": 0}))
    (tmp_path / "g.json").write_text(json.dumps({"a": 0, "b": 0, "c": 0}))
    (tmp_path / "c.json").write_text(json.dumps({"a": 0, "b": None, "c": 1}))
    return tmp_path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_cli_cap(files, capsys):
    code, out = _run(capsys, "cap", "--space", files / "s.json", "--set", "a,c", "--oracle")
    obj = json.loads(out)
    assert code == 0 and obj["kkt_ok"] and obj["oracle_agrees"]
    assert obj["value"] == pytest.approx(2.0)


def test_cli_metrics_and_qcr(files, capsys):
    code, out = _run(capsys, "dcap", "--space", files / "s.json", "--f", files / "f.json",
                     "--g", files / "g.json")
    assert code == 0 and json.loads(out)["dcap"] > 0
    code, out = _run(capsys, "dqu", "--space", files / "s.json", "--f", files / "f.json",
                     "--g", files / "g.json", "--method", "brute", "--format", "csv")
    assert code == 0 and out.startswith("key,value")
    code, out = _run(capsys, "qcr", "--space", files / "s.json", "--class", files / "c.json")
    obj = json.loads(out)
    assert obj["canonical"] is True and obj["values"]["b"] == pytest.approx(0.5)


def test_cli_batch_dcap(files, capsys):
    d = files / "fs"
    d.mkdir()
    for name in ("f.json", "g.json"):
        (d / name).write_text((files / name).read_text())
    code, out = _run(capsys, "dcap", "--space", files / "s.json", "--f-dir", d, "--g-dir", d)
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "f,g,dcap" and len(rows) == 5


def test_cli_module_study_verify(files, capsys):
    for suite in ("axioms", "hilbert", "quotient", "factor"):
        code, _ = _run(capsys, "module", "verify", "--space", files / "s.json", "--suite", suite)
        assert code == 0
    code, out = _run(capsys, "study", "refine-2d", "--n", 8, 16)
    assert code == 0 and json.loads(out)["passed"]
    code, out = _run(capsys, "verify", "--suite", "axioms", "--seed", 3)
    assert code == 0
    code2, out2 = _run(capsys, "verify", "--suite", "axioms", "--seed", 3)
    assert out == out2


def test_cli_space_and_errors(files, capsys):
    code, out = _run(capsys, "space", "--grid-1d", 0, 1, 3)
    assert code == 0 and len(json.loads(out)["vertices"]) == 3
    code, out = _run(capsys, "space", "--space", files / "s.json", "--summary")
    assert json.loads(out)["regime"] == "R2_with_null_vertices"
    code, _ = _run(capsys, "cap", "--space", files / "s.json", "--set", "zz")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["verify", "--suite", "bogus"])
