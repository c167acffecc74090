"""
CSV and text writers for solve / verify / compare outputs.
Floats are written with repr so identical runs give identical files.
"""
import csv
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["iteration", "distance", "ratio"]
TIMING_COLUMNS = ["iteration", "wall_time"]
NORM_COLUMNS = ["t", "lInf", "lP", "holderSemi", "c1AlphaP", "pathBeta", "pathLip",
                "N", "M", "M1", "P", "P_delta", "delta"]
BOUND_COLUMNS = ["bound", "scale", "measured", "bound_value", "within"]
DIFFERENCE_COLUMNS = ["t", "u_linf", "u_l2", "sigma_linf", "sigma_l2"]


def write_rows(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.debug("wrote %s", path)
    return path


def write_history(directory: str | Path, history) -> tuple[Path, Path]:
    """Convergence history; wall times go to a separate file."""
    rows = [asdict(h) for h in history]
    directory = Path(directory)
    return (write_rows(directory / "history.csv", HISTORY_COLUMNS, rows),
            write_rows(directory / "timings.csv", TIMING_COLUMNS, rows))


def write_norm_reports(path: str | Path, reports: Sequence[tuple[float, object]]) -> Path:
    """(t, NormReport) pairs, one row each."""
    return write_rows(path, NORM_COLUMNS, ({"t": t, **r.as_row()} for t, r in reports))


def write_bound_reports(directory: str | Path, reports) -> list[Path]:
    directory = Path(directory)
    return [write_rows(directory / f"{r.bound_name}.csv", BOUND_COLUMNS, r.rows())
            for r in reports]


def write_differences(path: str | Path, series) -> Path:
    return write_rows(path, DIFFERENCE_COLUMNS, series.rows())


def write_summary(path: str | Path, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(lines) + "\n"
    path.write_text(text, encoding="utf-8")
    return path
