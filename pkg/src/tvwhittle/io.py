"""CSV reading and writing for series and result tables."""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .exceptions import InvalidInputError


class CsvFormatError(InvalidInputError):
    """Malformed input CSV; the message carries the offending line number."""


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_rows(path, fieldnames, rows, append: bool = False):
    """Write dict rows; floats use 17 significant digits so values round-trip exactly."""
    path = Path(path)
    new = not (append and path.exists())
    with open(path, "w" if new else "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([format_value(row[k]) for k in fieldnames])
        fh.flush()
        os.fsync(fh.fileno())


def read_rows(path) -> list[dict]:
    """Read a table written by :func:`write_rows`, converting numeric fields back."""
    with open(path, newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _parse(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v in ("true", "false"):
        return v == "true"
    return v


def load_series(path) -> tuple[np.ndarray, list[str] | None]:
    """Load a one-column (value) or two-column (date,value) CSV.

    A header row is detected when its value field is not numeric. Returns
    the values and the dates (``None`` for one-column files).
    """
    values, dates = [], []
    ncol = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if ncol is None:
                ncol = len(row)
                if ncol not in (1, 2):
                    raise CsvFormatError(f"line {lineno}: expected 1 or 2 columns, found {ncol}")
                try:
                    float(row[-1])
                except ValueError:
                    continue  # header
            if len(row) != ncol:
                raise CsvFormatError(f"line {lineno}: expected {ncol} columns, found {len(row)}")
            try:
                v = float(row[-1])
            except ValueError:
                raise CsvFormatError(f"line {lineno}: cannot parse value {row[-1]!r}") from None
            if not np.isfinite(v):
                raise CsvFormatError(f"line {lineno}: non-finite value {row[-1]!r}")
            values.append(v)
            if ncol == 2:
                dates.append(row[0].strip())
    if len(values) < 2:
        raise CsvFormatError(f"{path}: need at least two observations")
    return np.array(values), (dates if ncol == 2 else None)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
