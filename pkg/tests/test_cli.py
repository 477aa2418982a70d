"""CLI tests driven through main(argv)."""

import csv
import json
import os

import pytest

from deltapad.cli import main


def test_workspace_report(capsys):
    assert main(["workspace-report"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["fraction_reachable"] == 1.0
    assert 2.0 <= doc["min_max_normal_force"] <= 3.6


def test_render_contact(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["render", "--mode", "contact", "--pattern", "C",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) > 60
    assert "wrote" in capsys.readouterr().out


def test_render_stretch_stroke_span(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["render", "--mode", "stretch", "--pattern", "R",
                 "--out", str(out)]) == 0
    rows = [r for r in csv.DictReader(open(out)) if r["phase"] == "stroke"]
    xs = [float(r["x"]) for r in rows]
    assert max(xs) - min(xs) == pytest.approx(6.0)


def test_render_bad_pattern(capsys):
    assert main(["render", "--mode", "contact", "--pattern", "ZZ"]) == 2
    assert "error" in capsys.readouterr().err


def test_run_perfect_responder(tmp_path, capsys):
    assert main(["run", "--mode", "contact", "--subject", "T1",
                 "--device", "none", "--responder", "perfect",
                 "--seed", "5", "--repetitions", "2", "--quiet",
                 "--out", str(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mean_rate"] == 1.0
    assert doc["total_trials"] == 18
    assert os.path.exists(doc["session_file"])


def test_run_with_sim_device(tmp_path, capsys):
    assert main(["run", "--mode", "stretch", "--subject", "T2",
                 "--device", "sim", "--responder", "perfect",
                 "--seed", "1", "--repetitions", "1", "--quiet",
                 "--out", str(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["total_trials"] == 8


def test_analyze_directory(tmp_path, capsys):
    for i, seed in enumerate((1, 2, 3, 4, 5)):
        assert main(["run", "--mode", "contact", "--subject", f"P{i}",
                     "--device", "none", "--seed", str(seed), "--quiet",
                     "--out", str(tmp_path)]) == 0
        capsys.readouterr()
    assert main(["analyze", str(tmp_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert {"h", "p_value"} <= set(doc["omnibus"])
    assert len(doc["pairwise"]) == 36
    assert doc["summary"]["n_sessions"] == 5


def test_analyze_empty_dir(tmp_path, capsys):
    assert main(["analyze", str(tmp_path)]) == 2
    assert "no session files" in capsys.readouterr().err


def test_device_test_sim(capsys):
    assert main(["device-test", "--device", "sim"]) == 0
    out = capsys.readouterr().out
    assert "center-touch" in out
    assert "ok" in out


def test_unknown_device_errors(capsys):
    assert main(["run", "--mode", "contact", "--subject", "x",
                 "--device", "floppy", "--quiet"]) == 2
    assert "unknown device" in capsys.readouterr().err
