"""Run-file parsing and validation."""
import json

import pytest

from config import CONFIG_VERSION, RunConfig, load_run_config
from errors import ConfigError


def _write(tmp_path, payload):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload))
    return path


def test_defaults_without_a_file():
    rc = load_run_config()
    assert rc == RunConfig()
    assert rc.out_of_range() == []


def test_file_values_and_overrides(tmp_path):
    path = _write(tmp_path, {"version": CONFIG_VERSION, "n": 16, "model": "mhd", "seed": 3})
    rc = load_run_config(path, out_dir=str(tmp_path / "out"), seed=11)
    assert rc.n == 16 and rc.model == "mhd"
    assert rc.seed == 11
    assert rc.output_dir == str(tmp_path / "out")


def test_unknown_keys_are_rejected(tmp_path):
    path = _write(tmp_path, {"version": CONFIG_VERSION, "resolution": 64})
    with pytest.raises(ConfigError, match="resolution"):
        load_run_config(path)


def test_version_is_required(tmp_path):
    with pytest.raises(ConfigError, match="version"):
        load_run_config(_write(tmp_path, {"n": 16}))
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, {"version": CONFIG_VERSION + 1}))


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_run_config(bad)
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, [1, 2]))


@pytest.mark.parametrize("key,value", [
    ("d", 4),
    ("n", 15),
    ("n", 4),
    ("T", 0.0),
    ("M", 0),
    ("model", "giesekus"),
    ("branch", "euler"),
    ("interpolation", "linear"),
    ("stencil", "random"),
    ("u0_preset", "vortex"),
    ("gamma", -1.0),
    ("tol_fp", 0.0),
])
def test_invalid_values(tmp_path, key, value):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path, {"version": CONFIG_VERSION, key: value}))


def test_out_of_range_needs_explicit_opt_in(tmp_path):
    payload = {"version": CONFIG_VERSION, "beta": 0.4}
    with pytest.raises(ConfigError, match="beta"):
        load_run_config(_write(tmp_path, payload))
    rc = load_run_config(_write(tmp_path, {**payload, "allow_out_of_range": True}))
    assert rc.out_of_range() == ["beta"]


def test_resolved_dict_round_trips(tmp_path):
    rc = RunConfig(n=16, T_sweep=[0.1, 0.05])
    again = load_run_config(_write(tmp_path, rc.to_dict()))
    assert again == rc
