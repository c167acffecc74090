"""
Run directory helper.
Holds the output directory of the current invocation; every run
directory carries a copy of the resolved configuration.
"""
import json
import logging
from pathlib import Path

from config import RESOLVED_CONFIG_NAME

logger = logging.getLogger(__name__)

_run_dir: Path | None = None


def open_run(out_dir: str | Path, resolved: dict) -> Path:
    """Create (if needed) out_dir, write the resolved config next to the outputs."""
    global _run_dir
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / RESOLVED_CONFIG_NAME, "w", encoding="utf-8") as f:
        json.dump(resolved, f, indent=2, sort_keys=True)
        f.write("\n")
    _run_dir = path
    logger.info("writing artifacts to %s", path)
    return path


def get_run_dir() -> Path:
    """Return the directory opened by open_run()."""
    if _run_dir is None:
        raise RuntimeError("no run directory open; call open_run() first")
    return _run_dir


def artifact_path(*parts: str) -> Path:
    """Path of an artifact inside the run directory, parents created."""
    path = get_run_dir().joinpath(*parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
