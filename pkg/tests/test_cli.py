"""CLI entry points: exit codes, overrides, and written artifacts."""

import numpy as np
import pytest
import yaml

from quadfault.cli import main
from quadfault.report import load_run, render_report
from quadfault.scenario import ScenarioConfig, hover, save


def _write_cfg(path, **overrides):
    cfg = hover(duration=0.6)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    save(cfg, path)
    return cfg


def test_run_success_exit_zero(tmp_path, capsys):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    out = tmp_path / "out"
    rc = main(["run", str(cfg_path), "--out", str(out)])
    assert rc == 0
    for name in ("run.csv", "events.csv", "summary.json"):
        assert (out / name).exists()
    assert "completed" in capsys.readouterr().out


def test_run_seed_and_duration_overrides(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    out = tmp_path / "o1"
    assert main(["run", str(cfg_path), "--out", str(out),
                 "--seed", "9", "--duration", "0.4"]) == 0
    df = load_run(out)
    assert np.isclose(df["t"].iloc[-1], 0.4 - 0.002)
    import json
    with open(out / "summary.json") as fh:
        assert json.load(fh)["seed"] == 9


def test_run_l1_off_flag(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    out = tmp_path / "o2"
    assert main(["run", str(cfg_path), "--out", str(out), "--l1", "off"]) == 0
    df = load_run(out)
    assert (df["f_cmd"] == df["f_nom"]).all()


def test_run_baseline_integral_flag(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    out = tmp_path / "o3"
    assert main(["run", str(cfg_path), "--out", str(out),
                 "--baseline-integral"]) == 0
    import json
    with open(out / "summary.json") as fh:
        payload = json.load(fh)
    assert payload["config"]["baseline_integral"]["enabled"] is True
    assert payload["config"]["l1"]["enabled"] is False


def test_run_missing_file_exit_two(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "nope.yaml")])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_run_malformed_yaml_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("duration: [unclosed\n")
    assert main(["run", str(bad)]) == 2
    bad.write_text("duration: 1.0\nbogus_key: 3\n")
    assert main(["run", str(bad)]) == 2
    bad.write_text("duration: -2.0\n")
    assert main(["run", str(bad)]) == 2


def test_run_bad_duration_override_exit_two(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    assert main(["run", str(cfg_path), "--duration", "-1"]) == 2


def test_run_divergence_exit_one(tmp_path):
    cfg_path = tmp_path / "div.yaml"
    cfg = hover(duration=3.0)
    with open(cfg_path, "w") as fh:
        from quadfault.scenario import to_dict
        d = to_dict(cfg)
        d["disturbance_schedule"] = [
            {"start": 0.5, "end": 1e9, "force": [50.0, 0.0, 0.0],
             "moment": [0.0, 0.0, 0.0]}]
        yaml.safe_dump(d, fh)
    assert main(["run", str(cfg_path), "--out", str(tmp_path / "d")]) == 1


def test_report_writes_figures_and_table(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    out = tmp_path / "r"
    assert main(["run", str(cfg_path), "--out", str(out)]) == 0
    assert main(["report", str(out)]) == 0
    for name in ("tracking.png", "damage.png", "adaptation.png", "rmse.csv"):
        p = out / name
        assert p.exists() and p.stat().st_size > 0
    # PNG magic bytes: the figures are real images, not placeholders
    with open(out / "tracking.png", "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
    import csv
    with open(out / "rmse.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["axis"] for r in rows] == ["x", "y", "z", "mean"]


def test_report_separate_out_dir(tmp_path):
    cfg_path = tmp_path / "h.yaml"
    _write_cfg(cfg_path)
    run_dir = tmp_path / "r2"
    main(["run", str(cfg_path), "--out", str(run_dir)])
    fig_dir = tmp_path / "figs"
    assert main(["report", str(run_dir / "run.csv"), "--out", str(fig_dir)]) == 0
    assert (fig_dir / "tracking.png").exists()


def test_sweep_directory_of_configs(tmp_path):
    cfg_dir = tmp_path / "cfgs"
    cfg_dir.mkdir()
    _write_cfg(cfg_dir / "a.yaml", seed=0, name="a")
    _write_cfg(cfg_dir / "b.yaml", seed=1, name="b")
    out = tmp_path / "sw"
    assert main(["sweep", str(cfg_dir), "--out", str(out)]) == 0
    assert (out / "sweep_summary.csv").exists()
    assert (out / "sweep_summary.json").exists()
    assert (out / "sweep.png").exists()
    assert (out / "a" / "run.csv").exists()
    assert (out / "b" / "run.csv").exists()


def test_sweep_empty_directory_exit_two(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["sweep", str(empty), "--out", str(tmp_path / "o")]) == 2
