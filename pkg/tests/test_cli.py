import json
import subprocess
import sys

import pytest

from perciso.cli import build_parser, main


def run(capsys, *argv):
    assert main(list(argv)) == 0
    return capsys.readouterr().out


def test_sample_csv(capsys):
    out = run(capsys, "sample", "--n", "8", "--samples", "2", "--p", "0.7")
    lines = out.strip().splitlines()
    assert lines[0] == "n,sample,open_edges,clusters,giant_size,uniq_event" and len(lines) == 3


def test_sample_writes_configs(tmp_path, capsys):
    run(capsys, "sample", "--n", "6", "--samples", "1", "--out", str(tmp_path))
    assert (tmp_path / "config_n6_0.bin").exists() and (tmp_path / "samples.csv").exists()


def test_theta_json(capsys):
    data = json.loads(run(capsys, "theta", "--n", "8", "--samples", "3", "--p", "0.8", "--format", "json"))
    assert data["p"] == 0.8 and 0 < data["rows"][0]["theta"] <= 1


def test_mu(capsys):
    data = json.loads(run(capsys, "mu", "--n", "8", "16", "--samples", "4", "--format", "json"))
    assert data["mu_hat"] > 0.8 and len(data["ci95"]) == 2


def test_wulff_l1(tmp_path, capsys):
    run(capsys, "wulff", "--p", "1", "--out", str(tmp_path))
    summary = json.loads((tmp_path / "wulff.json").read_text())
    assert summary["iso_constant"] == 4.0
    assert (tmp_path / "wulff.svg").read_text().startswith("<svg")


def test_phi_and_seed_override(capsys, monkeypatch):
    base = run(capsys, "phi", "--n", "8", "--samples", "2", "--seed", "5")
    monkeypatch.setenv("PERCISO_SEED", "5")
    assert run(capsys, "phi", "--n", "8", "--samples", "2", "--seed", "99") == base
    monkeypatch.setenv("PERCISO_SEED", "6")
    assert run(capsys, "phi", "--n", "8", "--samples", "2", "--seed", "5") != base


def test_tail_needs_thresholds(capsys):
    with pytest.raises(SystemExit):
        main(["tail", "--n", "8"])
    out = run(capsys, "tail", "--n", "8", "--samples", "2", "--t", "3.0")
    assert out.splitlines()[0].startswith("n,t,trials,lower,upper")


def test_plant_annulus(capsys):
    data = json.loads(run(capsys, "plant-annulus", "--n", "16", "--samples", "2", "--format", "json"))
    assert data["cells"][0]["edge_count"] == 24 * 11 and "spec_hash" in data


def test_plant_barrier_rejects_small_n():
    with pytest.raises(ValueError):
        main(["plant-barrier", "--n", "16", "--samples", "1", "--t", "6"])


def test_density(capsys):
    out = run(capsys, "density", "--n", "16", "--samples", "2")
    assert out.splitlines()[0].startswith("n,trials,event_failures")


def test_report(tmp_path, capsys):
    out = run(capsys, "report", "--n", "8", "12", "--samples", "2", "--out", str(tmp_path))
    assert {p.rsplit("/", 1)[-1] for p in out.split()} >= {"tail.csv", "summary.json", "phi_vs_n.svg"}


def test_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "perciso.cli", "sample", "--n", "4", "--samples", "1"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("n,sample")
