"""Dataset ingestion and CSV / npz serialisation of draws."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateLocation, OutOfDomain, ParseError

FLOAT_FMT = "%.17g"
DATASET_HEADER = ["x", "y", "value"]


@dataclass(frozen=True)
class Dataset:
    obs_locs: np.ndarray
    y_o: np.ndarray

    def __len__(self):
        return self.y_o.shape[0]


def load_dataset(path, domain=None):
    """Read a UTF-8 ``x,y,value`` CSV, keeping row order.

    Raises :class:`ParseError` (with line and column), :class:`DuplicateLocation`
    or, when ``domain`` is given, :class:`OutOfDomain`.
    """
    rows = []
    seen = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty file", line=1)
        if [h.strip() for h in header] != DATASET_HEADER:
            raise ParseError(f"header must be {','.join(DATASET_HEADER)}, got {','.join(header)}", line=1)
        for record in reader:
            line = reader.line_num
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != 3:
                raise ParseError(f"expected 3 fields, got {len(record)}", line=line)
            vals = []
            for col, text in enumerate(record, start=1):
                try:
                    v = float(text)
                except ValueError:
                    raise ParseError(f"not a number: {text!r}", line=line, column=col) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite value {text!r}", line=line, column=col)
                vals.append(v)
            key = (vals[0], vals[1])
            if key in seen:
                raise DuplicateLocation(f"row at line {line} repeats the location of line {seen[key]}: {key}")
            seen[key] = line
            rows.append(vals)
    if len(rows) < 2:
        raise ParseError("a dataset needs at least two rows")
    arr = np.array(rows)
    locs = arr[:, :2]
    if domain is not None:
        inside = domain.contains(locs)
        if not np.all(inside):
            bad = int(np.flatnonzero(~inside)[0])
            raise OutOfDomain(f"data row {bad + 1} at {tuple(locs[bad])} lies outside the domain")
    return Dataset(locs, arr[:, 2].copy())


def write_dataset(path, obs_locs, y_o):
    table = {"x": np.asarray(obs_locs)[:, 0], "y": np.asarray(obs_locs)[:, 1], "value": np.asarray(y_o)}
    write_table(path, table)


def _fmt(v):
    return FLOAT_FMT % v


def write_table(path, table):
    """Write a dict of equal-length columns with 17 significant digits."""
    names = list(table)
    cols = [np.asarray(table[k], dtype=float).ravel() for k in names]
    n = cols[0].size if cols else 0
    if any(c.size != n for c in cols):
        raise ValueError("columns differ in length")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in cols) + "\n")


def read_table(path):
    """Inverse of :func:`write_table`: returns (column names, float array)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    return names, np.array(data, dtype=float).reshape(-1, len(names))


def write_trace(path, columns, trace):
    write_table(path, {c: np.asarray(trace)[:, i] for i, c in enumerate(columns)})


def read_trace(path):
    return read_table(path)


def save_latent(path, chain):
    """Store retained events, Y_N values and mesh draws of a chain as ragged arrays."""
    counts = np.array([e.shape[0] for e in chain.events], dtype=int)
    events = np.vstack(chain.events) if chain.events else np.zeros((0, 2))
    y_n = np.concatenate(chain.y_n) if chain.y_n else np.zeros(0)
    mesh = np.array(chain.y_mesh) if chain.y_mesh else np.zeros((0, 0))
    np.savez(Path(path), counts=counts, events=events.reshape(-1, 2), y_n=y_n, y_mesh=mesh)


def load_latent(path):
    """Returns (events list, y_n list, mesh list)."""
    with np.load(Path(path)) as z:
        counts = z["counts"]
        offsets = np.concatenate([[0], np.cumsum(counts)])
        events = [z["events"][offsets[i]:offsets[i + 1]] for i in range(counts.size)]
        y_n = [z["y_n"][offsets[i]:offsets[i + 1]] for i in range(counts.size)]
        mesh = list(z["y_mesh"]) if z["y_mesh"].size else []
    return events, y_n, mesh
