"""Atomic file output in the CSV/JSON dialects used by the command line."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["write_atomic", "rows_to_csv", "write_rows", "write_json", "to_jsonable"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_atomic(path, text):
    """Write via a temp file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def rows_to_csv(rows, columns=None):
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_rows(path, rows, fmt="csv", columns=None):
    """Write a table as CSV (header row, LF endings) or as a JSON list of records."""
    if fmt == "csv":
        return write_atomic(path, rows_to_csv(rows, columns))
    if fmt == "json":
        if columns is not None:
            rows = [{c: r[c] for c in columns} for r in rows]
        return write_atomic(path, json.dumps(to_jsonable(rows), indent=2) + "\n")
    raise ValueError(f"unknown format {fmt!r}")


def write_json(path, obj):
    return write_atomic(path, json.dumps(to_jsonable(obj), indent=2) + "\n")
