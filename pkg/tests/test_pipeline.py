import json

import pytest

from ricci_forge.errors import DomainMismatch
from ricci_forge.pipeline import STAGES, PipelineConfig, run


@pytest.fixture(scope="module")
def run_23(tmp_path_factory):
    out = tmp_path_factory.mktemp("p23")
    return out, run(PipelineConfig(nu=(2, 3), m=1, out_dir=str(out)))


def test_nu_1_passes_homotopy_sphere():
    rep = run(PipelineConfig(nu=(1,), plots=False))
    assert rep.passed
    assert rep.stage("normal_form").summary["blocks"] == [1]
    assert rep.stage("eqf").summary["summands"] == {"HomotopySphere": 1}


def test_nu_23_all_stages(run_23):
    out, rep = run_23
    assert rep.passed and [s.name for s in rep.stages] == [n for n, _ in STAGES]
    assert rep.stage("normal_form").summary["blocks"] == [1, 1, 1, 6]
    assert len(json.loads((out / "schedule.json").read_text())["steps"]) == 5
    doc = json.loads((out / "report.json").read_text())
    assert doc["schema"] == "ricci-forge/pipeline-report" and doc["passed"] and doc["skipped"] == []
    assert "out_dir" not in doc["config"]


def test_nu_23_artifacts(run_23):
    out, rep = run_23
    names = {p.name for p in out.iterdir()}
    for s in rep.stages:
        assert set(s.artifacts) <= names
    assert {"report.json", "timing.txt", "collapse_scan.csv", "collapse_scan.png", "tot_geod_scan.png"} <= names


def test_ell_too_small_stops_at_first_stage():
    rep = run(PipelineConfig(nu=(2,), ell=1, plots=False))
    assert not rep.passed and rep.first_failure == "matrix"
    assert rep.stages[0].error["error"] == "EllTooSmall"
    assert len(rep.to_dict()["skipped"]) == len(STAGES) - 1


def test_eqf_with_coefficients():
    cfg = PipelineConfig(nu=(1,), coeff_group=(24,), p_image=(12,), mu_w=((5,), (7,)), plots=False)
    rep = run(cfg)
    assert rep.passed
    bad = PipelineConfig(nu=(1,), coeff_group=(24,), p_image=(1,), plots=False)
    rep = run(bad)
    assert rep.first_failure == "eqf"


def test_config_round_trip_and_digest():
    cfg = PipelineConfig(nu=(2, 3), out_dir="/x", threads=4)
    back = PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg
    assert PipelineConfig(nu=(2, 3)).digest() == cfg.digest()
    assert PipelineConfig(nu=(2, 3), h_nu=1.01).digest() != cfg.digest()


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(nu=())
    with pytest.raises(ValueError):
        PipelineConfig(nu=(0,))
    assert issubclass(DomainMismatch, ValueError)
