"""CSV/JSON writers with a fixed, versioned layout.

CSV files start with a ``# schema_version=N`` comment line, then a header row;
floats use 17 significant digits so a re-read recovers the exact double.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def format_csv(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_csv(columns: Sequence[str], rows, path) -> None:
    """Write ``rows`` under ``columns``; no rows gives a header-only file."""
    text = format_csv(columns, rows)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(text)


def columns_to_rows(data: Mapping[str, Sequence]):
    cols = list(data)
    arrays = [np.asarray(data[c]) for c in cols]
    n = {a.shape[0] for a in arrays}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    return cols, zip(*arrays)


def read_csv(path):
    """Inverse of :func:`emit_csv`: (schema_version, {column: float array})."""
    with open(path, encoding="ascii", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema_version="):
            raise ValueError(f"{path}: missing schema_version line")
        version = int(first.split("=", 1)[1])
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {h: np.array([float(r[i]) for r in body], dtype=float) for i, h in enumerate(header)}
    return version, out


def _jsonable(v):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them readable as strings
        return v if math.isfinite(v) else repr(v)
    return v


def format_json(obj) -> str:
    doc = _jsonable(obj)
    if isinstance(doc, dict):
        doc = dict(doc, schema_version=SCHEMA_VERSION)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_json(obj, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_json(obj))
