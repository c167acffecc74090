"""End-to-end runs of the command-line entry point."""
import csv
import json

import pytest

from app import build_parser, main
from config import CONFIG_VERSION, RESOLVED_CONFIG_NAME


def _config(tmp_path, **overrides):
    payload = {"version": CONFIG_VERSION, "n": 16, "M": 4, "T": 0.05,
               "interpolation": "trig", **overrides}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    return str(path)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot"])


def test_solve_zero_data(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, u0_preset="zero", sigma0_preset="zero")
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert (out / RESOLVED_CONFIG_NAME).exists()
    history = _rows(out / "history.csv")
    assert len(history) == 1 and float(history[0]["distance"]) == 0.0
    assert (out / "timings.csv").exists()
    assert (out / "snapshots" / "frame_0004" / "tau_01.bin").exists()
    norms = _rows(out / "norms.csv")
    assert float(norms[0]["P"]) == 0.0
    assert "converged in 1 iteration" in (out / "summary.txt").read_text()


def test_solve_small_navier_stokes_data(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, branch="navier-stokes")
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    norms = _rows(out / "norms.csv")
    assert 0 < float(norms[0]["delta"]) <= 0.25


def test_seed_flag_lands_in_resolved_config(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, u0_preset="zero", sigma0_preset="zero")
    assert main(["solve", "--config", cfg, "--out", str(out), "--seed", "9"]) == 0
    assert json.loads((out / RESOLVED_CONFIG_NAME).read_text())["seed"] == 9


def test_non_convergence_exit_status(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, tol_fp=1e-300, max_iter=2)
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 3
    assert len(_rows(out / "history.csv")) == 2


def test_invariant_violation_exit_status(tmp_path):
    cfg = _config(tmp_path, T=0.5, u0_amplitude=5.0)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "out")]) == 4


def test_bad_config_exit_status(tmp_path):
    cfg = _config(tmp_path, model="giesekus")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_unknown_check_exit_status(tmp_path):
    cfg = _config(tmp_path)
    assert main(["verify", "--config", cfg, "--check", "nope"]) == 2


def test_verify_single_check(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, T_sweep=[0.05, 0.025])
    assert main(["verify", "--config", cfg, "--out", str(out), "--check", "g-bound"]) == 0
    rows = _rows(out / "checks" / "g-bound.csv")
    assert [float(r["scale"]) for r in rows] == [0.05, 0.025]
    assert (out / "summary.txt").read_text().startswith("PASS")


def test_compare_writes_differences(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, u0_preset="zero", sigma0_preset="zero")
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    rows = _rows(out / "differences_n16.csv")
    assert len(rows) == 5
    assert all(float(r["u_linf"]) == 0.0 for r in rows)


def test_compare_runs_every_refinement_level(tmp_path):
    out = tmp_path / "out"
    cfg = _config(tmp_path, u0_preset="zero", sigma0_preset="zero", refinements=[8, 16])
    assert main(["compare", "--config", cfg, "--out", str(out)]) == 0
    assert len(_rows(out / "differences_n8.csv")) == 5
    assert len(_rows(out / "differences_n16.csv")) == 9
    assert "samples=2" in (out / "summary.txt").read_text()
