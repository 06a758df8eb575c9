import json

import pytest

from qdlattice.cli import main
from qdlattice.reports import Report, report_json, validate_report, worker_count


def run_cli(args):
    return main(args)


def test_groundstate_run_and_schema(tmp_path):
    out = tmp_path / "report.json"
    code = run_cli(
        [
            "--experiment",
            "groundstate",
            "--group",
            "z2",
            "--lattice",
            "2x2:plane",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert validate_report(data) == []
    assert data["passed"] is True
    assert all(c["law"] for c in data["checks"])


def test_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code = run_cli(
            [
                "--experiment",
                "deform",
                "--group",
                "z2",
                "--lattice",
                "3x3:plane",
                "--seed",
                "11",
                "--out",
                str(out),
            ]
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_details_not_validity(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for seed, out in [(1, a), (2, b)]:
        assert (
            run_cli(
                [
                    "--experiment",
                    "deform",
                    "--group",
                    "z2",
                    "--lattice",
                    "3x3:plane",
                    "--seed",
                    str(seed),
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert da["passed"] and db["passed"]
    assert da["config"]["seed"] != db["config"]["seed"]


def test_csv_export(tmp_path):
    out = tmp_path / "smx.json"
    code = run_cli(
        ["--experiment", "smatrix", "--group", "z2", "--out", str(out)]
    )
    assert code == 0
    csvs = sorted(p.name for p in tmp_path.iterdir() if p.suffix == ".csv")
    assert csvs == ["smx.smatrix.csv", "smx.smatrix_normalized.csv"]
    header = (tmp_path / "smx.smatrix.csv").read_text().splitlines()[0]
    assert header == "row,col,re,im"


def test_unknown_experiment_rejected(capsys):
    with pytest.raises(SystemExit):
        run_cli(["--experiment", "nonsense"])


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps({"experiment": "groundstate", "group": "z3", "lattice": "2x2:plane"})
    )
    assert run_cli(["--config", str(cfg)]) == 0


def test_malformed_specs_error():
    assert run_cli(["--experiment", "groundstate", "--group", "z1"]) == 2
    assert run_cli(["--experiment", "groundstate", "--lattice", "0x0:plane"]) == 2


def test_report_validation_catches_problems():
    rep = Report("demo", {})
    rep.add("ok", "plumbing", True, 0.0)
    data = json.loads(report_json(rep))
    assert validate_report(data) == []
    data["checks"][0].pop("law")
    assert validate_report(data)


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("QDL_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("QDL_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("QDL_THREADS", "bogus")
    assert worker_count() == 1


def test_published_schema_validates_reports(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    from qdlattice.reports import schema

    out = tmp_path / "r.json"
    for exp, grp in [("groundstate", "z2"), ("smatrix", "z2"), ("deform", "z2")]:
        args = ["--experiment", exp, "--group", grp, "--out", str(out)]
        if exp in ("groundstate", "deform"):
            args += ["--lattice", "3x3:plane"]
        assert run_cli(args) == 0
        data = json.loads(out.read_text())
        jsonschema.validate(data, schema())
        assert validate_report(data) == []


def test_thread_cap_preserves_determinism(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["--experiment", "smatrix", "--group", "z2", "--seed", "3"]
    monkeypatch.delenv("QDL_THREADS", raising=False)
    assert run_cli(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("QDL_THREADS", "3")
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
