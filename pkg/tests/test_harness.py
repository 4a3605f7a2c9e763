"""Run configuration, check suites, report serialization, CLI."""

import json
from dataclasses import replace

import pytest

from crgeom.cli import main
from crgeom.contact import (ConstantFactor, JLFamilyFactor, RandomTrigFactor,
                            SphereSmoothFactor)
from crgeom.harness import (ANCHORS, DEFAULT_TOLS, ConfigError, RunConfig,
                            config_from_dict, emit_report, parse_factor,
                            report_from_json, report_to_csv, report_to_json,
                            run_check_suite)


@pytest.fixture(scope="module")
def small_cfg():
    return RunConfig(model="sphere", m=1, factor="jl:t=0.7", points=10)


@pytest.fixture(scope="module")
def transform_report(small_cfg):
    return run_check_suite(small_cfg, "transform")


def test_parse_factor_kinds():
    assert isinstance(parse_factor("const", 1), ConstantFactor)
    assert parse_factor("const:2.5", 1).c == 2.5
    fac = parse_factor("jl:t=0.4,c=1.1,xi=1", 2)
    assert isinstance(fac, JLFamilyFactor)
    assert fac.c == 1.1 and fac.t == 0.4
    assert isinstance(parse_factor("trig:seed=7,amplitude=0.3", 1),
                      RandomTrigFactor)
    assert isinstance(parse_factor("smooth:seed=2", 1), SphereSmoothFactor)
    norm = parse_factor("jl:t=0.5", 1)     # no c= -> rescaled member
    assert isinstance(norm, JLFamilyFactor)
    assert norm.c != 1.0


@pytest.mark.parametrize("bad", ["bogus", "jl:t=abc", "const:1,2",
                                 "jl:t=0.5,xi=5", "trig:seed=x"])
def test_parse_factor_rejects_malformed(bad):
    with pytest.raises(ConfigError):
        parse_factor(bad, 1)


@pytest.mark.parametrize("kwargs", [
    {"m": 5}, {"model": "torus"}, {"jet_order": 3}, {"points": 0},
    {"workers": 0}, {"factor": "bogus"}, {"tol": {"jl-identity": -1.0}},
    {"quad_angle": 2},
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        replace(RunConfig(), **kwargs).validate()


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_dict({"modle": "sphere"})
    cfg = config_from_dict({"m": 2, "points": 7})
    assert cfg.m == 2 and cfg.points == 7


def test_anchor_table_is_complete_and_nonempty():
    assert set(ANCHORS) == set(DEFAULT_TOLS)
    for cid, anchor in ANCHORS.items():
        assert isinstance(anchor, str) and anchor.strip(), cid


def test_every_emitted_check_has_anchor(transform_report):
    for c in transform_report.checks:
        assert c.id in ANCHORS
        assert c.anchor == ANCHORS[c.id]
        assert c.verdict in ("pass", "fail", "skipped-informational")


def test_tolerance_override_changes_verdict(small_cfg):
    strict = replace(small_cfg, tol={"structure-equations": 0.0})
    rep = run_check_suite(strict, "transform")
    rec = next(c for c in rep.checks if c.id == "structure-equations")
    assert rec.tolerance == 0.0
    assert rec.verdict == "fail"
    assert rep.verdict == "fail"


def test_reports_are_byte_deterministic(small_cfg, transform_report):
    again = run_check_suite(small_cfg, "transform")
    assert report_to_json(transform_report) == report_to_json(again)
    assert report_to_csv(transform_report) == report_to_csv(again)


def test_parallel_execution_merges_identically(small_cfg, transform_report):
    par = run_check_suite(replace(small_cfg, workers=3), "transform")
    assert par.checks == transform_report.checks


def test_json_round_trip(transform_report):
    text = report_to_json(transform_report)
    data = json.loads(text)           # valid JSON
    assert data["verdict"] == transform_report.verdict
    back = report_from_json(text)
    assert back.checks == transform_report.checks
    assert report_to_json(back) == text


def test_json_serializes_17_significant_digits(transform_report):
    text = report_to_json(transform_report)
    val = json.loads(text)["checks"][0]["max_residual"]
    assert f"{val:.17g}" in text


def test_csv_summary_shape(transform_report):
    lines = report_to_csv(transform_report).splitlines()
    assert lines[0] == "id,points,max_residual,mean_residual,tolerance,verdict"
    assert lines[-1].startswith("overall,")
    assert len(lines) == len(transform_report.checks) + 2


def test_emit_report_writes_file(tmp_path, transform_report):
    out = tmp_path / "rep.json"
    text = emit_report(transform_report, str(out), "json")
    assert out.read_text() == text
    with pytest.raises(ConfigError):
        emit_report(transform_report, None, "yaml")


def test_meta_has_versions_and_config_echo(transform_report, small_cfg):
    meta = transform_report.meta
    assert meta["suite"] == "transform"
    assert meta["config"]["points"] == small_cfg.points
    assert set(meta["versions"]) == {"python", "numpy", "crgeom"}


def test_unknown_suite_rejected(small_cfg):
    with pytest.raises(ConfigError):
        run_check_suite(small_cfg, "everything")


# ----------------------------------------------------------------------
# CLI


def test_cli_verify_pass_and_output(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["verify", "--suite", "appendix", "--points", "8",
                 "--factor", "jl:t=0.7", "--format", "csv-summary",
                 "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines()[-1] == "overall,,,,,pass"


def test_cli_verify_failure_exit_code(tmp_path):
    code = main(["verify", "--suite", "transform", "--points", "6",
                 "--tol", "structure-equations=0",
                 "--out", str(tmp_path / "r.json")])
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "transform", "--m", "9"],
    ["verify", "--suite", "transform", "--factor", "bogus:1"],
    ["verify", "--suite", "transform", "--tol", "nonsense"],
    ["verify", "--suite", "jerison-lee", "--model", "heisenberg"],
])
def test_cli_config_errors_exit_2(argv):
    assert main(argv) == 2


def test_cli_config_file_with_flag_override(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"points": 6, "factor": "jl:t=0.7"}))
    out = tmp_path / "rep.json"
    code = main(["verify", "--config", str(cfgfile), "--suite", "appendix",
                 "--points", "9", "--out", str(out)])
    assert code == 0
    rep = report_from_json(out.read_text())
    assert rep.meta["config"]["points"] == 9       # flag beats file
    assert rep.meta["config"]["factor"] == "jl:t=0.7"


def test_cli_report_writes_csv_json_and_figures(tmp_path):
    prefix = tmp_path / "out"
    code = main(["report", "--suite", "appendix", "--points", "6",
                 "--factor", "jl:t=0.7", "--out", str(prefix)])
    assert code == 0
    assert (tmp_path / "out.json").exists()
    assert (tmp_path / "out.csv").exists()
    png = tmp_path / "out-residuals.png"
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_malformed_config_file(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text("{not json")
    assert main(["verify", "--config", str(bad), "--suite", "transform"]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json"),
                 "--suite", "transform"]) == 2
