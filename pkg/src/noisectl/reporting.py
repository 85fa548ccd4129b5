"""CSV and text output writers shared by the CLI and the verification suite.

CSV files are comma-separated with a header row and LF line endings;
floats are written with repr so that identical numbers produce identical
bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

from .engine import Trajectory

__all__ = [
    "write_trajectories_csv",
    "write_summary_csv",
    "write_report_txt",
    "format_float",
]


def format_float(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trajectories_csv(path: str | Path, trajectories: Iterable[Trajectory]) -> None:
    """Write run_id,n,x rows for every stored point of every trajectory."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "n", "x"])
        for run_id, traj in enumerate(trajectories):
            for n, x in zip(traj.steps, traj.values):
                w.writerow([run_id, int(n), format_float(float(x))])


def write_summary_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("no summary rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([format_float(row[k]) for k in fields])


def write_report_txt(path: str | Path, sections: Iterable[str]) -> None:
    text = "\n\n".join(s.rstrip() for s in sections) + "\n"
    Path(path).write_text(text)
