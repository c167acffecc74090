"""Run directory, snapshots and CSV reports."""
import csv
import json

import numpy as np
import pytest

from analysis.presets import single_mode_stress, taylor_green
from analysis.verify import fit_bound
from config import RESOLVED_CONFIG_NAME, RunConfig
from lagrangian.solver import HistoryRow
from spectral.grid import GridSpec, Path, TimeGrid
from storage import run_dir
from storage.reports import (HISTORY_COLUMNS, write_bound_reports, write_history,
                             write_rows, write_summary)
from storage.snapshots import read_component, read_snapshot, write_path_frames, write_snapshot


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


# ── Run directory ──────────────────────────────────────────────────

def test_run_dir_requires_open(monkeypatch):
    monkeypatch.setattr(run_dir, "_run_dir", None)
    with pytest.raises(RuntimeError):
        run_dir.get_run_dir()


def test_open_run_writes_resolved_config(tmp_path, monkeypatch):
    monkeypatch.setattr(run_dir, "_run_dir", None)
    rc = RunConfig(n=16)
    out = run_dir.open_run(tmp_path / "run", rc.to_dict())
    assert run_dir.get_run_dir() == out
    resolved = json.loads((out / RESOLVED_CONFIG_NAME).read_text())
    assert resolved["n"] == 16 and resolved["version"] == 1
    path = run_dir.artifact_path("checks", "u-bound.csv")
    assert path.parent.is_dir() and path.parent.parent == out


# ── Snapshots ──────────────────────────────────────────────────────

def test_snapshot_files_and_header(tmp_path):
    grid = GridSpec(2, 8)
    paths = write_snapshot(tmp_path, "u", taylor_green(grid, 0.3), 0.25)
    assert sorted(p.name for p in paths) == ["u_0.bin", "u_1.bin"]
    # raw little-endian float64, n^d values per component
    assert (tmp_path / "u_0.bin").stat().st_size == 8 * 64
    values, header = read_component(tmp_path / "u_1.bin")
    assert header == {"d": 2, "n": 8, "L": grid.L, "rank": 1, "component": [1], "time": 0.25}
    assert values.shape == (8, 8)


def test_snapshot_reassembles_symmetric_tensor(tmp_path):
    grid = GridSpec(2, 8)
    sigma = single_mode_stress(grid, 0.5)
    write_snapshot(tmp_path, "sigma", sigma, 0.0)
    back, t = read_snapshot(tmp_path, "sigma", rank=2, symmetric=True)
    assert t == 0.0
    assert back.grid == grid and back.symmetric
    assert np.array_equal(back.values, sigma.values)


def test_path_frames_get_one_directory_each(tmp_path):
    grid = GridSpec(2, 8)
    tg = TimeGrid(0.1, 2)
    write_path_frames(tmp_path, "u", Path.constant(tg, taylor_green(grid, 0.1)))
    frames = sorted(p.name for p in tmp_path.iterdir())
    assert frames == ["frame_0000", "frame_0001", "frame_0002"]
    _, t = read_snapshot(tmp_path / "frame_0002", "u", rank=1)
    assert np.isclose(t, 0.1)


# ── Reports ────────────────────────────────────────────────────────

def test_history_and_timings_are_split(tmp_path):
    history = [HistoryRow(1, 0.5, float("nan"), 0.01), HistoryRow(2, 0.1, 0.2, 0.02)]
    hist, timings = write_history(tmp_path, history)
    rows = _read_csv(hist)
    assert list(rows[0]) == HISTORY_COLUMNS
    assert rows[1] == {"iteration": "2", "distance": "0.1", "ratio": "0.2"}
    assert [r["wall_time"] for r in _read_csv(timings)] == ["0.01", "0.02"]


def test_write_rows_ignores_extra_keys(tmp_path):
    path = write_rows(tmp_path / "nested" / "x.csv", ["a"], [{"a": 1, "b": 2}])
    assert _read_csv(path) == [{"a": "1"}]


def test_bound_reports_one_file_per_check(tmp_path):
    reports = [fit_bound("u-bound", [0.2, 0.1], [1.0, 0.5], [1.0, 1.0])]
    (path,) = write_bound_reports(tmp_path, reports)
    assert path.name == "u-bound.csv"
    rows = _read_csv(path)
    assert [r["within"] for r in rows] == ["True", "True"]


def test_summary_ends_with_newline(tmp_path):
    path = write_summary(tmp_path / "summary.txt", ["one", "two"])
    assert path.read_text() == "one\ntwo\n"
