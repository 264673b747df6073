"""Result rows and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import Optional

COLUMNS = ("experiment", "label", "n", "reps", "mean", "stderr", "oracle", "z_score",
           "wall_time_ms", "seed")


@dataclass
class ResultRow:
    experiment: str
    label: str
    n: int
    reps: int
    mean: float
    stderr: float
    oracle: Optional[float] = None
    z_score: Optional[float] = None
    wall_time_ms: Optional[float] = None
    seed: Optional[int] = None
    passed: bool = True

    def __post_init__(self):
        if self.z_score is None and self.oracle is not None:
            d = self.mean - self.oracle
            if self.stderr > 0:
                self.z_score = d / self.stderr
            elif d == 0:
                self.z_score = 0.0


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def rows_to_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        vals = [getattr(r, c) for c in COLUMNS]
        if not timing:
            vals[COLUMNS.index("wall_time_ms")] = None
        w.writerow([_fmt(v) for v in vals])
    return buf.getvalue()


def shift_rows_to_csv(rows) -> str:
    """The narrower column set used by the shift subcommands' summaries."""
    cols = ("label", "n", "reps", "mean", "stderr", "oracle", "z_score")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def row_fields() -> tuple:
    return tuple(f.name for f in fields(ResultRow))
