import json
from pathlib import Path

import pytest

from alloylab.cli import main as cli_main
from alloylab.lab import (
    ConfigError,
    ReportError,
    config_from_dict,
    load_config,
    report,
    run,
    sample_seed,
)

TOML_SURVEY = """
pipeline = "survey"

[model]
N = 2
d = 1
v = 10.0
u0 = 1.0
r0 = 1.0
h = "1/2"
eta = 0.5
m = 0.2
p = 6.0
q = 1.0

[scales]
L0 = 3
k_max = 0

[ensemble]
n_samples = 3
master_seed = 777

[e_grid]
count = 3
"""


def write_toml(tmp_path, text=TOML_SURVEY, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def artifact_bytes(run_dir):
    return {
        p.name: p.read_bytes()
        for p in sorted(Path(run_dir).iterdir())
        if p.name != "manifest.json"
    }


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_seed_mixing_is_fixed():
    # regression-pin the public mixing function
    assert sample_seed(0, 0) != sample_seed(0, 1)
    assert sample_seed(1, 0) != sample_seed(0, 0)
    assert sample_seed(777, 5) == sample_seed(777, 5)
    assert 0 <= sample_seed(2**63, 10) < 2**64


def test_load_toml_and_json_equivalent(tmp_path):
    toml_cfg = load_config(write_toml(tmp_path))
    data = {
        "pipeline": "survey",
        "model": {"N": 2, "d": 1, "v": 10.0, "u0": 1.0, "r0": 1.0, "h": "1/2",
                  "eta": 0.5, "m": 0.2, "p": 6.0, "q": 1.0},
        "scales": {"L0": 3, "k_max": 0},
        "ensemble": {"n_samples": 3, "master_seed": 777},
        "e_grid": {"count": 3},
    }
    json_path = tmp_path / "cfg.json"
    json_path.write_text(json.dumps(data))
    json_cfg = load_config(json_path)
    assert toml_cfg == json_cfg
    assert toml_cfg.config_hash() == json_cfg.config_hash()


def test_bad_configs_rejected(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict({"pipeline": "nope"})
    with pytest.raises(ConfigError):
        config_from_dict({"pipeline": "survey", "mystery": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"pipeline": "survey", "model": {"h": 0.3}})
    with pytest.raises(ConfigError):
        config_from_dict({"pipeline": "survey", "scales": {"L0": 1}})
    bad = tmp_path / "bad.toml"
    bad.write_text("pipeline = [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_e_grid_spans_window():
    cfg = config_from_dict({"pipeline": "survey"})
    grid = cfg.e_grid()
    assert len(grid) == 16
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(cfg.model.eta)


# ---------------------------------------------------------------------------
# run engine
# ---------------------------------------------------------------------------


def test_validate_pipeline(tmp_path):
    cfg = config_from_dict({"pipeline": "validate"})
    manifest = run(cfg, out_dir=tmp_path / "r")
    assert manifest.status == 0
    data = json.loads((tmp_path / "r" / "validation.json").read_text())
    assert data["all_passed"]
    assert (tmp_path / "r" / "manifest.json").exists()
    assert "validation.json" in manifest.digests


def test_invalid_exponent_gate(tmp_path):
    cfg = config_from_dict({"pipeline": "validate", "model": {"p": 5.0}})
    with pytest.raises(ConfigError):
        run(cfg, out_dir=tmp_path / "r1")
    manifest = run(cfg, out_dir=tmp_path / "r2", allow_invalid=True)
    assert manifest.status == 0
    data = json.loads((tmp_path / "r2" / "validation.json").read_text())
    assert not data["all_passed"]


def test_survey_run_and_artifacts(tmp_path):
    cfg = load_config(write_toml(tmp_path))
    manifest = run(cfg, out_dir=tmp_path / "out")
    assert manifest.status == 0
    rows = (tmp_path / "out" / "survey_samples.csv").read_text().splitlines()
    assert rows[0] == "k,L,seed,sample_idx,E_fail,verdict_x,verdict_y,failure"
    assert len(rows) == 1 + 3
    summary = json.loads((tmp_path / "out" / "survey_summary.json").read_text())
    assert summary["per_scale"][0]["samples"] == 3
    assert summary["per_scale"][0]["bound"] == pytest.approx(3.0 ** (-12))


def test_zero_samples_writes_valid_headers(tmp_path):
    cfg = config_from_dict(
        {"pipeline": "survey", "ensemble": {"n_samples": 0}, "e_grid": {"count": 2}}
    )
    manifest = run(cfg, out_dir=tmp_path / "out")
    assert manifest.status == 0
    rows = (tmp_path / "out" / "survey_samples.csv").read_text().splitlines()
    assert rows == ["k,L,seed,sample_idx,E_fail,verdict_x,verdict_y,failure"]


def test_run_twice_byte_identical(tmp_path):
    cfg = load_config(write_toml(tmp_path))
    run(cfg, out_dir=tmp_path / "a")
    run(cfg, out_dir=tmp_path / "b")
    assert artifact_bytes(tmp_path / "a") == artifact_bytes(tmp_path / "b")
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["digests"] == mb["digests"]


def test_worker_count_leaves_digests_unchanged(tmp_path):
    cfg = load_config(write_toml(tmp_path))
    m1 = run(cfg, out_dir=tmp_path / "w1", workers=1)
    m2 = run(cfg, out_dir=tmp_path / "w2", workers=2)
    assert m1.digests == m2.digests


def test_quarantine_sets_status(tmp_path):
    # a grid over the row cap quarantines every sample: status 3, run completes
    cfg = config_from_dict(
        {
            "pipeline": "classify",
            "model": {"h": "1/8"},
            "scales": {"L0": 59, "k_max": 0},
            "ensemble": {"n_samples": 2},
            "e_grid": {"count": 2},
        }
    )
    manifest = run(cfg, out_dir=tmp_path / "q")
    assert manifest.status == 3
    assert len(manifest.quarantined) == 2
    assert "DimensionCapError" in manifest.quarantined[0]["error"]
    rows = (tmp_path / "q" / "classify_samples.csv").read_text().splitlines()
    assert len(rows) == 1  # header only, all samples quarantined


def test_moment_and_spectral_pipelines(tmp_path):
    base = {
        "model": {"v": 2.0, "eta": 1.5},
        "scales": {"L0": 3, "k_max": 1},
        "ensemble": {"n_samples": 2, "master_seed": 5},
    }
    cfg = config_from_dict({**base, "pipeline": "spectral"})
    manifest = run(cfg, out_dir=tmp_path / "s")
    assert manifest.status == 0
    summary = json.loads((tmp_path / "s" / "spectral_summary.json").read_text())
    assert summary["n_pairs"] >= 0
    cfg = config_from_dict({**base, "pipeline": "moment"})
    manifest = run(cfg, out_dir=tmp_path / "m")
    assert manifest.status == 0
    lines = (tmp_path / "m" / "moment_samples.jsonl").read_text().splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert [s["k"] for s in first["scales"]] == [0, 1]
    for s in first["scales"]:
        assert all(t["dominated"] for t in s["sampled_t"])


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


def test_report_from_survey_run(tmp_path):
    cfg = load_config(write_toml(tmp_path))
    run(cfg, out_dir=tmp_path / "out")
    written = report(tmp_path / "out")
    assert "report_survey.csv" in written and "summary.txt" in written
    table = (tmp_path / "out" / "report_survey.csv").read_text().splitlines()
    assert table[0] == "k,L,rate,wilson_lo,wilson_hi,bound"
    assert len(table) == 2


def test_report_missing_artifacts(tmp_path):
    with pytest.raises(ReportError, match="manifest.json"):
        report(tmp_path)
    # manifest present but artifact deleted
    cfg = load_config(write_toml(tmp_path))
    run(cfg, out_dir=tmp_path / "out")
    (tmp_path / "out" / "survey_summary.json").unlink()
    with pytest.raises(ReportError, match="survey_summary.json"):
        report(tmp_path / "out")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_survey_and_report(tmp_path, capsys):
    cfg_path = write_toml(tmp_path)
    code = cli_main(["survey", "--config", str(cfg_path), "--out", str(tmp_path / "out")])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pipeline"] == "survey" and out["status"] == 0
    code = cli_main(["report", str(tmp_path / "out")])
    assert code == 0


def test_cli_invalid_config_exit_2(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('pipeline = "survey"\n[model]\np = 5.0\n')
    code = cli_main(["survey", "--config", str(path), "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_allow_invalid_proceeds(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text('pipeline = "validate"\n[model]\np = 5.0\n')
    code = cli_main(
        ["validate", "--config", str(path), "--out", str(tmp_path / "x"), "--allow-invalid"]
    )
    assert code == 0


def test_cli_report_missing_dir(tmp_path):
    assert cli_main(["report", str(tmp_path / "nothing")]) == 1
