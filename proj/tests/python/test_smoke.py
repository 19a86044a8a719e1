import csv
import math
import pathlib

import numpy as np
import pytest

import skytrack

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_assign_2d():
    rows, total = skytrack.assign_2d(np.array([[4.0, 1.0], [2.0, 3.0]]))
    assert rows == [1, 0]
    assert total == 3.0


def test_ospa():
    truth = np.array([[0.0, 0.0]])
    tracks = np.array([[0.0, 0.0], [100.0, 0.0]])
    assert skytrack.ospa(truth, tracks, p=2, c=10) == pytest.approx(math.sqrt(50))
    assert skytrack.ospa(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0


def test_geodetic_origin_is_zero():
    local = skytrack.geodetic_to_local([52.0, -1.0, 0.0], [52.0, -1.0, 0.0])
    assert np.linalg.norm(local) < 1e-6


def test_validate_and_errors(tmp_path):
    info = skytrack.validate(ROOT / "configs" / "class_b.yaml")
    assert info["scenario"] == "class_b"
    assert info["filters"] == ["ekf", "ukf", "ckf", "sif"]
    with pytest.raises(skytrack.ConfigError, match=r"bad_switch.yaml:\d+: .*row 1 sums to 0.9"):
        skytrack.validate(ROOT / "tests" / "data" / "bad_switch.yaml")


def test_run_writes_csvs(tmp_path):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(
        "version: 1\nscenario: class_b\nseeds: [1]\n"
        "filters:\n  - {kind: ekf}\n  - {kind: sif, iterations: 3}\n"
        "class_b: {n_targets: 3, horizon: 10}\n",
        encoding="utf-8",
    )
    result = skytrack.run(cfg, out=tmp_path / "out", seeds=[5, 6])
    assert result["exit_code"] == 0
    assert [(r["label"], r["seed"]) for r in result["runs"]] == [
        ("EKF", 5), ("EKF", 6), ("SIF", 5), ("SIF", 6)]
    with open(tmp_path / "out" / "runs.csv", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    for row, run in zip(rows, result["runs"]):
        assert float(row["ospa_mean"]) == pytest.approx(run["ospa_mean"], rel=1e-15)


def test_simulate(tmp_path):
    out = skytrack.simulate(ROOT / "configs" / "class_a.yaml", out=tmp_path / "sim", seeds=[2])
    with open(pathlib.Path(out) / "detections_seed2.csv", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
    assert header == ["scan", "time", "target_id", "elevation", "bearing", "range", "sensor"]
