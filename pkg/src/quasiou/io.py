"""CSV and JSON artifacts.

Every data file is long-format CSV with the columns
``series_id, t, value, se`` (``se`` empty when not applicable), so one
reader serves paths, kernels and covariance curves alike.  Reports and
resolved configurations are JSON.
"""

import csv
import json
import math
from pathlib import Path as _FsPath

import numpy as np

COLUMNS = ("series_id", "t", "value", "se")


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def write_long_csv(path, rows):
    """Write ``(series_id, t, value, se)`` rows; floats are written with ``repr`` (round-trip exact)."""
    path = _FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for sid, t, v, se in rows:
            w.writerow((sid, _fmt(t), _fmt(v), _fmt(se)))
    return path


def read_long_csv(path):
    """Rows of a long CSV grouped by series: ``{series_id: (t, value, se)}`` arrays."""
    out = {}
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        if tuple(r.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: expected columns {COLUMNS}, got {r.fieldnames}")
        for row in r:
            out.setdefault(row["series_id"], []).append(
                (float(row["t"]), float(row["value"]), float(row["se"]) if row["se"] else np.nan))
    return {k: tuple(np.array(c) for c in zip(*v)) for k, v in out.items()}


def path_rows(path, prefix="path"):
    """Long rows for every path of a :class:`~quasiou.noise.Path`."""
    vals = np.atleast_2d(path.values)
    t = path.grid.times
    return [(f"{prefix}{i}", ti, v, None) for i, row in enumerate(vals) for ti, v in zip(t, row)]


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats for :func:`json.dump`."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj):
    path = _FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
