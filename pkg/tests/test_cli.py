from __future__ import annotations

import json

import pytest

from cdtomo import cli
from cdtomo.measurement import NumericalConsistencyError


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gopt_output(capsys):
    code, out, _ = run_cli(["gopt", "--dims", "2,5"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "d,g_opt,tv1_min,g_opt_numeric"
    d2 = lines[1].split(",")
    assert d2[0] == "2"
    assert float(d2[1]) == pytest.approx(1.2995, abs=0.005)
    assert float(d2[1]) == pytest.approx(float(d2[3]), abs=1e-6)


def test_fig1_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "fig1.csv"
    code, _, _ = run_cli(
        ["fig1", "--trials", "20", "--seed", "3", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "g,tv1,mean_D,stderr"
    assert len(lines) == 14
    manifest = json.loads((tmp_path / "fig1.manifest.json").read_text())
    assert manifest["command"] == "fig1"
    assert manifest["params"]["seed"] == 3


def test_run_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "campaign.cfg"
    out = tmp_path / "out.csv"
    cfg.write_text(
        f"dims = 2\nschemes = mdst:1.3\nn_values = 100\ntrials = 4\nseed = 11\nout = {out}\n"
    )
    code, _, _ = run_cli(["run", str(cfg)], capsys)
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0].startswith("scheme,d,g,N")
    assert lines[1].startswith("mdst,2,1.3,100,4,")


def test_run_determinism_across_worker_flag(tmp_path, capsys):
    cfg = tmp_path / "campaign.cfg"
    cfg.write_text("dims = 2\nschemes = mdst:1.3,su2\nn_values = 100\ntrials = 6\nseed = 11\n")
    outputs = []
    for workers in ("1", "2"):
        out = tmp_path / f"out{workers}.csv"
        code, _, _ = run_cli(
            ["run", str(cfg), "--out", str(out), "--workers", workers], capsys)
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_stdout_output(tmp_path, capsys):
    cfg = tmp_path / "campaign.cfg"
    cfg.write_text("dims = 2\nschemes = pauli\nn_values = 30\ntrials = 3\nseed = 1\nout = -\n")
    code, out, _ = run_cli(["run", str(cfg)], capsys)
    assert code == 0
    assert out.startswith("scheme,d,g,N")


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dims = 2\nschemes = warp:9\nn_values = 100\ntrials = 2\nseed = 1\n")
    code, _, err = run_cli(["run", str(cfg)], capsys)
    assert code == 1
    assert "configuration error" in err


def test_missing_config_file(capsys):
    code, _, err = run_cli(["run", "/nonexistent/path.cfg"], capsys)
    assert code == 1
    assert "configuration error" in err


def test_unknown_flag_maps_to_config_error(capsys):
    code, _, _ = run_cli(["fig1", "--frobnicate"], capsys)
    assert code == 1


def test_numerical_failure_exit_code(monkeypatch, tmp_path, capsys):
    def boom(cfg):
        raise NumericalConsistencyError("imaginary part too large")

    monkeypatch.setattr(cli, "run_experiment", boom)
    cfg = tmp_path / "campaign.cfg"
    cfg.write_text("dims = 2\nschemes = pauli\nn_values = 30\ntrials = 2\nseed = 1\n")
    code, _, err = run_cli(["run", str(cfg)], capsys)
    assert code == 2
    assert "numerical consistency" in err
