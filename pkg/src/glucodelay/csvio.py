"""CSV writers with full double precision."""

from __future__ import annotations

import csv
import math
from pathlib import Path


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = float(v)
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_trajectory(path, traj) -> Path:
    return write_csv(path, ("t", "I", "G"), zip(traj.t, traj.I, traj.G))


def write_step_log(path, traj) -> Path:
    rows = ((t, dt, err, bool(acc), bool(red)) for t, dt, err, acc, red in traj.step_log)
    return write_csv(path, ("t", "dt", "err", "accepted", "reduced_order"), rows)
