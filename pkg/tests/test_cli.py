import json

import pytest

from vertexfol.cli import SCHEMA_VERSION, build_parser, main

SMALL = ["--degree", "2"]


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def test_foliation_report_passes(tmp_path):
    code, out = run(tmp_path, "foliation", *SMALL)
    assert code == 0
    report = json.loads((out / "foliation.json").read_text())
    assert report["schema_version"] == SCHEMA_VERSION
    assert report["status"] == "pass"
    assert (out / "foliation.tsv").read_text().startswith("name\tstatus\twitness\n")


def test_same_seed_gives_identical_bytes(tmp_path):
    _, a = run(tmp_path / "a", "foliation", *SMALL, "--seed", "3")
    _, b = run(tmp_path / "b", "foliation", *SMALL, "--seed", "3")
    assert (a / "foliation.json").read_bytes() == (b / "foliation.json").read_bytes()


def test_fixture_faults_fail_with_witnesses(tmp_path):
    code, out = run(tmp_path, "foliation", *SMALL, "--fixture-faults")
    assert code == 1
    report = json.loads((out / "foliation.json").read_text())
    failed = [c for c in report["checks"] if c["status"] == "fail"]
    assert failed and all(c["witness"] for c in failed)


def test_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cutoff": 0}))
    assert main(["h1", "--config", str(bad)]) == 2
    assert main(["h1", "--config", str(tmp_path / "missing.json")]) == 2
    bad.write_text(json.dumps({"nonsense": 1}))
    assert main(["h1", "--config", str(bad)]) == 2
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"kind": "sphere"}))
    assert main(["foliation", "--model", str(model)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cached_and_cold_runs_agree(tmp_path, monkeypatch):
    monkeypatch.setenv("VERTEXFOL_CACHE", str(tmp_path / "cache"))
    _, cold = run(tmp_path / "cold", "delta-squared", "--cutoff", "2")
    assert list((tmp_path / "cache").iterdir())
    _, warm = run(tmp_path / "warm", "delta-squared", "--cutoff", "2")
    assert (cold / "delta-squared.json").read_bytes() == (warm / "delta-squared.json").read_bytes()


def test_model_file_is_used(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps({"kind": "torus", "slope": "1/3", "sections": 2}))
    code, out = run(tmp_path, "foliation", "--model", str(model), *SMALL)
    assert code == 0
    names = [c["name"] for c in json.loads((out / "foliation.json").read_text())["checks"]]
    assert any('"1/3"' in n for n in names)


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])
