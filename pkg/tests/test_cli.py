import json

import pytest

from ricci_forge.cli import main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_round_sphere_scan(tmp_path, capsys):
    spec = tmp_path / "s3.json"
    assert main(["curvature", "round-sphere", "--a", "1", "--b", "1", "--out", str(spec)]) == 0
    capsys.readouterr()
    csv = tmp_path / "s3.csv"
    rc = main(["curvature", "scan", "--spec", str(spec), "--step", "0.01", "--csv", str(csv), "--plot", "--json"])
    assert rc == 0
    out = _json(capsys)
    assert out["min_margin"] == pytest.approx(2.0) and out["verdict"] == "pass"
    assert csv.exists() and (tmp_path / "s3.png").exists()


def test_oracle_and_eval(tmp_path, capsys):
    spec = tmp_path / "s.json"
    main(["curvature", "round-sphere", "--a", "2", "--b", "2", "--out", str(spec)])
    capsys.readouterr()
    assert main(["curvature", "eval", "--spec", str(spec), "--t", "0.4", "--json"]) == 0
    assert _json(capsys)["rtt"] == pytest.approx(4.0)
    assert main(["curvature", "oracle", "--spec", str(spec), "--points", "3", "--json"]) == 0
    capsys.readouterr()


def test_skew_commands(tmp_path, capsys):
    assert main(["skew", "build-b", "--nu", "2,3", "--ell", "2", "--out", str(tmp_path / "b.json")]) == 0
    capsys.readouterr()
    assert main(["skew", "normal-form", "--in", str(tmp_path / "b.json"), "--json"]) == 0
    assert _json(capsys)["blocks"] == [1, 1, 1, 6]
    assert main(["skew", "pfaffian", "--in", str(tmp_path / "b.json"), "--json"]) == 0
    assert abs(_json(capsys)["pfaffian"]) == 6


def test_domain_error_exit_1(capsys):
    assert main(["skew", "build-a", "--n", "4", "--ell", "2", "--json"]) == 1
    assert "ParityBoundViolation" in capsys.readouterr().out


def test_usage_errors_exit_2(capsys):
    assert main(["nonsense"]) == 2
    assert main(["skew", "normal-form", "--in", "/nonexistent.json"]) == 2


def test_h_eps_nu_105_fails(capsys):
    assert main(["construct", "h-eps", "--nu", "1.05", "--m", "2", "--json"]) == 1
    assert "JunctionSignViolation" in capsys.readouterr().out


def test_construct_collapse_writes_files(tmp_path, capsys):
    out = tmp_path / "col.json"
    rc = main(["construct", "collapse", "--out", str(out), "--report", str(tmp_path / "r.json"),
               "--csv", str(tmp_path / "col.csv"), "--plot", "--json"])
    assert rc == 0
    res = _json(capsys)
    assert res["certification"]["verdict"] == "pass"
    assert out.exists() and (tmp_path / "col.png").exists()


def test_linking_realize(tmp_path, capsys):
    rc = main(["linking", "realize", "--nu", "2,3", "--out", str(tmp_path), "--json"])
    assert rc == 0
    capsys.readouterr()
    assert {"family.json", "matrix.json", "graph.dot", "schedule.json"} <= {p.name for p in tmp_path.iterdir()}


def test_pipeline_ell_too_small(capsys):
    assert main(["pipeline", "run", "--nu", "2", "--ell", "1", "--no-plots", "--json"]) == 1
    assert _json(capsys)["first_failure"] == "matrix"


def test_human_output(capsys):
    assert main(["skew", "build-a", "--n", "1", "--ell", "1"]) == 0
    out = capsys.readouterr().out
    assert out and not out.lstrip().startswith("{")
