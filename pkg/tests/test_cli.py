"""Command-line interface: exit codes, outputs, determinism."""

import json
import os

import pytest

from foldcont.cli import main
from foldcont.config import RunConfig


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_dump_config_roundtrips(capsys):
    assert main(["--dump-config"]) == 0
    out = capsys.readouterr().out
    cfg = RunConfig.from_text(out)
    assert cfg.get("continuation", "ds_init") == 0.1
    assert f"fold_tol = {format(1e-8, '.17g')}" in out
    assert float(cfg.get("continuation", "fold_tol")) == 1e-8


def test_no_command_exits_1():
    assert main(["--quiet"]) == 1


def test_bad_config_exits_1(tmp_path, capsys):
    path = _write(tmp_path, "bad.cfg", "[continuation]\nnope = 1\n")
    assert main(["--config", path, "trace"]) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_config_exits_1(tmp_path):
    assert main(["--config", str(tmp_path / "absent.cfg"), "trace"]) == 1


def test_trace_self_check_and_outputs(tmp_path):
    cfg = _write(tmp_path, "t.cfg",
                 "[problem]\ndomain = interval:64\n")
    out = str(tmp_path / "run")
    rc = main(["--quiet", "--config", cfg, "--out", out,
               "trace", "--self-check"])
    assert rc == 0
    for name in ("branch.jsonl", "branch.csv", "events.json", "folds.json"):
        assert os.path.exists(os.path.join(out, name))
    events = json.load(open(os.path.join(out, "events.json")))
    kinds = [e["kind"] for e in events]
    assert kinds.count("Fold") == 1
    assert kinds[-1] in ("MuFloor", "NormCap")
    folds = json.load(open(os.path.join(out, "folds.json")))
    assert abs(folds[0]["mu_fold"] - 3.5138) < 0.01


def test_trace_rerun_bit_identical(tmp_path):
    cfg = _write(tmp_path, "t.cfg", "[problem]\ndomain = interval:64\n")
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert main(["--quiet", "--config", cfg, "--out", out, "trace"]) == 0
        outs.append(out)
    for name in ("branch.jsonl", "branch.csv", "events.json", "folds.json"):
        a = open(os.path.join(outs[0], name), "rb").read()
        b = open(os.path.join(outs[1], name), "rb").read()
        assert a == b, name


def test_spectrum_table(tmp_path, capsys):
    cfg = _write(tmp_path, "s.cfg",
                 "[problem]\ndomain = interval:64\n[spectrum]\nk = 3\n")
    assert main(["--quiet", "--config", cfg, "--out",
                 str(tmp_path / "o"), "spectrum"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "i,sigma"
    assert len(lines) == 4
    sig1 = float(lines[1].split(",")[1])
    assert sig1 > 0.0  # stable branch at mu = 1


def test_oracle_tables(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["--quiet", "--out", out, "oracle"]) == 0
    text = capsys.readouterr().out
    assert "b,mu,sup_norm" in text
    assert "mu_fold_shooting" in text
    rows = open(os.path.join(out, "oracle_radial.csv")).read().splitlines()
    b1 = rows[2].split(",")  # b = 1 row of the default grid
    assert float(b1[1]) == pytest.approx(2.0, abs=1e-12)


def test_shape_check_passes_thresholds(tmp_path, capsys):
    cfg = _write(tmp_path, "sh.cfg",
                 "[problem]\ndomain = interval:256\n")
    rc = main(["--quiet", "--config", cfg, "--out",
               str(tmp_path / "o"), "shape-check"])
    assert rc == 0
    rep = json.load(open(tmp_path / "o" / "shape_report.json"))
    assert rep["observed_order"] >= 0.9
    assert rep["relative_gap"] <= 0.05


def test_shape_check_bad_field_index(tmp_path):
    cfg = _write(tmp_path, "sh.cfg",
                 "[problem]\ndomain = interval:64\n"
                 "[shape]\nfield_index = 99\n")
    assert main(["--quiet", "--config", cfg, "--out",
                 str(tmp_path / "o"), "shape-check"]) == 1


def test_generic_exp_outputs(tmp_path):
    cfg = _write(tmp_path, "g.cfg",
                 "[problem]\ndomain = rect:16x16\n"
                 "[experiment]\nn_samples = 2\nn_modes = 2\n")
    out = str(tmp_path / "g")
    assert main(["--quiet", "--config", cfg, "--out", out, "--seed", "7",
                 "generic-exp"]) == 0
    rep = json.load(open(os.path.join(out, "experiment.json")))
    assert rep["summary"]["seed"] == 7
    assert rep["summary"]["n_failed_samples"] == 0
    assert len(rep["samples"]) == 2
