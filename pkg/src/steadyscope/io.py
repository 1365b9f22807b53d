"""CSV and JSON emission for the command-line tool."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x, full_precision=False):
    """Render one cell.  Floats use 10 significant digits, or repr when full precision is asked."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x) if full_precision else f"{x:.10g}"
    return str(x)


def write_csv(path, header, rows, full_precision=False):
    """RFC-4180 CSV: header row, CRLF line ends, minimal quoting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v, full_precision) for v in r])
    return path


def read_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def jsonable(obj):
    """Recursively convert numpy scalars, tuples and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")
    return path
