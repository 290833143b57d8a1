"""CSV histories and JSON-lines snapshots.

Floats are written with ``repr`` so files round-trip exactly and repeated
runs give byte-identical output.
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .eulerian import CSV_COLUMNS, RunRecord
from .spectral import SpectralField

LAGRANGIAN_COLUMNS = CSV_COLUMNS + ["min_gamma_x"]


def format_float(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_history(records, fh, lagrangian: bool = False) -> None:
    cols = LAGRANGIAN_COLUMNS if lagrangian else CSV_COLUMNS
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([format_float(getattr(r, c)) for c in cols])


class HistoryWriter:
    """Streams records as they are produced (partial output survives a
    breakdown)."""

    def __init__(self, fh, columns=None):
        self.fh = fh
        self.columns = list(columns or CSV_COLUMNS)
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(self.columns)

    def write(self, record) -> None:
        if isinstance(record, dict):
            get = record.get
        else:
            get = lambda c: getattr(record, c)  # noqa: E731
        self._w.writerow([format_float(get(c)) for c in self.columns])
        self.fh.flush()


def read_history(fh) -> list:
    """Rows as dicts of floats (empty cells become ``None``)."""
    out = []
    for row in csv.DictReader(fh):
        out.append({k: (float(v) if v != "" else None) for k, v in row.items()})
    return out


def _pairs(f: SpectralField) -> list:
    return [[float(c.real), float(c.imag)] for c in f.coeffs]


def _from_pairs(pairs) -> SpectralField:
    a = np.asarray(pairs, dtype=np.float64)
    return SpectralField(a[:, 0] + 1j * a[:, 1])


def snapshot_line(t: float, u: SpectralField, displacement: SpectralField | None = None,
                  zeta: SpectralField | None = None) -> str:
    row = {"t": float(t), "n_modes": u.n_modes, "coeffs": _pairs(u)}
    if displacement is not None:
        row["displacement"] = _pairs(displacement)
    if zeta is not None:
        row["zeta"] = _pairs(zeta)
    return json.dumps(row)


def read_snapshots(fh) -> list:
    """``[(t, u), ...]`` from a snapshot file."""
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        u = _from_pairs(row["coeffs"])
        if u.n_modes != row["n_modes"]:
            raise ValueError(f"snapshot at t={row['t']} has inconsistent n_modes")
        out.append((row["t"], u))
    return out


__all__ = [
    "CSV_COLUMNS", "LAGRANGIAN_COLUMNS", "HistoryWriter", "RunRecord", "format_float", "write_history",
    "read_history", "snapshot_line", "read_snapshots",
]
