"""CSV reading/writing with stable formatting.

All run outputs that claim determinism go through write_csv: floats are
rendered with a fixed %.10g so a rerun with the same seed produces a
byte-identical file, and newlines are pinned to \\n regardless of
platform.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Any, Sequence

FLOAT_FORMAT = "%.10g"


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(path: str | Path, fieldnames: Sequence[str], rows: Sequence[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([format_value(row[name]) for name in fieldnames])


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_csv_floats(path: str | Path, columns: Sequence[str]) -> dict[str, list[float]]:
    rows = read_csv(path)
    return {c: [float(r[c]) for r in rows] for c in columns}
