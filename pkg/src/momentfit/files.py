"""Sample files, CSV tables and deterministic JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidSamples


def read_samples(path):
    """Decimal numbers from a one-column CSV or newline-delimited text file.

    A non-numeric first line is taken as a header; blank lines are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidSamples(f"cannot read {path}: {exc.strerror}") from None
    values = []
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row if c.strip()]
        if len(cells) != 1:
            raise InvalidSamples(f"{path}:{i + 1}: expected one column, got {len(cells)}")
        try:
            values.append(float(cells[0]))
        except ValueError:
            if i == 0:
                continue
            raise InvalidSamples(f"{path}:{i + 1}: not a number: {cells[0]!r}") from None
    return np.array(values)


def write_samples(path, samples):
    with open(path, "w", newline="") as fh:
        fh.write("x\n")
        for v in np.asarray(samples, dtype=float):
            fh.write(f"{fmt(v)}\n")


def fmt(v):
    """Shortest round-tripping decimal for floats; ``nan`` for missing."""
    if v is None:
        return "nan"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan
        return v if math.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))
