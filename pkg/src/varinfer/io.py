"""CSV/JSON serialization helpers. Floats are written with 17 significant digits."""
import csv
import hashlib
import json

import numpy as np

from .errors import ConfigError
from .model import VarSample


def fmt(x):
    return format(float(x), ".17g")


def write_matrix(path, M, header=None):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in M:
            w.writerow([fmt(v) for v in row])


def read_matrix(path, header=False):
    """Read a numeric CSV; malformed cells raise ConfigError naming row and column."""
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row:
                continue
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ConfigError(f"{path}: row {lineno}, column {col}: not a number: {cell!r}") from None
            if rows and len(vals) != len(rows[0]):
                raise ConfigError(f"{path}: row {lineno}: expected {len(rows[0])} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return np.array(rows)


def write_sample(path, sample):
    p = sample.p
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{j + 1}" for j in range(p)])
        for t, row in enumerate(sample.series):
            w.writerow([t] + [fmt(v) for v in row])


def read_sample(path):
    try:
        with open(path, newline="") as fh:
            head = next(csv.reader(fh), None)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc}") from None
    if not head or head[0] != "t" or any(h != f"x{j + 1}" for j, h in enumerate(head[1:])):
        raise ConfigError(f"{path}: row 1: header must be t,x1,...,xp")
    data = read_matrix(path, header=True)
    if data.shape[1] != len(head):
        raise ConfigError(f"{path}: expected {len(head)} columns, got {data.shape[1]}")
    return VarSample(data[:, 1:])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def digest(obj):
    blob = json.dumps(obj, sort_keys=True, default=_default, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
