"""
Field snapshots: one flat little-endian float64 file per tensor
component in row-major grid order, plus a JSON sidecar header.
"""
import itertools
import json
from pathlib import Path

import numpy as np

from spectral.grid import Field, GridSpec

DTYPE = "<f8"


def _stem(name: str, index: tuple[int, ...]) -> str:
    if not index:
        return name
    return f"{name}_{''.join(str(i) for i in index)}"


def write_snapshot(directory: str | Path, name: str, f: Field, time: float) -> list[Path]:
    """Write every component of f; returns the .bin paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for index in itertools.product(range(f.grid.d), repeat=f.rank):
        stem = _stem(name, index)
        data = np.ascontiguousarray(f.values[index], dtype=DTYPE)
        path = directory / f"{stem}.bin"
        data.tofile(path)
        header = {
            "d": f.grid.d,
            "n": f.grid.n,
            "L": f.grid.L,
            "rank": f.rank,
            "component": list(index),
            "time": float(time),
        }
        with open(directory / f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(header, fh, sort_keys=True)
        written.append(path)
    return written


def read_component(path: str | Path) -> tuple[np.ndarray, dict]:
    """Load one .bin component and its sidecar header."""
    path = Path(path)
    with open(path.with_suffix(".json"), encoding="utf-8") as fh:
        header = json.load(fh)
    shape = (header["n"],) * header["d"]
    return np.fromfile(path, dtype=DTYPE).reshape(shape), header


def read_snapshot(directory: str | Path, name: str, rank: int,
                  symmetric: bool = False) -> tuple[Field, float]:
    """Reassemble a Field written by write_snapshot()."""
    directory = Path(directory)
    first, header = read_component(directory / f"{_stem(name, (0,) * rank)}.bin")
    grid = GridSpec(header["d"], header["n"], header["L"])
    values = np.empty((grid.d,) * rank + grid.shape)
    for index in itertools.product(range(grid.d), repeat=rank):
        values[index], _ = read_component(directory / f"{_stem(name, index)}.bin")
    return Field(grid, values, rank, symmetric), header["time"]


def write_path_frames(directory: str | Path, name: str, path) -> None:
    """Snapshots of every frame of a Path under directory/frame_XXXX/."""
    for m, (t, f) in enumerate(zip(path.time_grid.nodes, path)):
        write_snapshot(Path(directory) / f"frame_{m:04d}", name, f, t)
