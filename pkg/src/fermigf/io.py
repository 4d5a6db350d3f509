"""File formats: curve/field/measurement CSV, a compact binary field format, JSON summaries.

CSV floats are written with 17 significant digits so values round-trip
exactly; JSON summaries are rounded to 12 significant digits.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .fermi import FermiCurve
from .measurement import EXPERIMENTS, MeasurementRecord
from .wigner import PhaseSpaceField

FLOAT_FORMAT = "%.17g"
JSON_DIGITS = 12
FIELD_MAGIC = b"FGFWIG01"
FIELD_HEADER = struct.Struct("<QQdddd")

CURVE_COLUMNS = ("q", "re_p_plus", "im_p_plus", "re_p_minus", "im_p_minus",
                 "real_branch", "valid")


def fmt(x: float) -> str:
    return FLOAT_FORMAT % x


def _write_rows(path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_curve_csv(curve: FermiCurve, path, dimensionless_scale: tuple[float, float] | None = None,
                    dimensionless_first: bool = False) -> Path:
    """One row per grid point; masked points carry NaN branch values.

    ``dimensionless_scale = (q_unit, p_unit)`` adds q/q_unit and p/p_unit
    columns (the real parts of both branches); ``dimensionless_first`` puts
    them ahead of the raw columns.
    """
    raw_cols = list(CURVE_COLUMNS)
    raw = [curve.q, curve.p_plus.real, curve.p_plus.imag, curve.p_minus.real,
           curve.p_minus.imag, curve.real_branch.astype(int), curve.valid.astype(int)]
    cols, data = raw_cols, raw
    if dimensionless_scale is not None:
        qu, pu = dimensionless_scale
        extra_cols = ["q_scaled", "re_p_plus_scaled", "re_p_minus_scaled"]
        extra = [curve.q / qu, curve.p_plus.real / pu, curve.p_minus.real / pu]
        cols = extra_cols + raw_cols if dimensionless_first else raw_cols + extra_cols
        data = extra + raw if dimensionless_first else raw + extra
    # tolist() yields Python floats and ints, which _write_rows formats by type
    return _write_rows(path, cols, zip(*(np.asarray(col).tolist() for col in data)))


def read_curve_csv(path) -> dict[str, np.ndarray]:
    """Columns of a curve CSV as arrays (ints for the two flags)."""
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        if name in ("real_branch", "valid"):
            out[name] = np.array([int(v) for v in vals], dtype=bool)
        else:
            out[name] = np.array([float(v) for v in vals])
    return out


def write_field_csv(field: PhaseSpaceField, path) -> Path:
    rows = ((float(q), float(p), float(field.values[i, j]))
            for i, q in enumerate(field.q) for j, p in enumerate(field.p))
    return _write_rows(path, ("q", "p", "value"), rows)


def write_field_binary(field: PhaseSpaceField, path) -> Path:
    """Magic, little-endian header (n_q, n_p, q_min, q_max, p_min, p_max), row-major float64."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = FIELD_HEADER.pack(len(field.q), len(field.p), float(field.q[0]), float(field.q[-1]),
                               float(field.p[0]), float(field.p[-1]))
    body = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    path.write_bytes(FIELD_MAGIC + header + body)
    return path


def read_field_binary(path) -> PhaseSpaceField:
    blob = Path(path).read_bytes()
    if not blob.startswith(FIELD_MAGIC):
        raise ValueError(f"{path} is not a phase-space field file")
    off = len(FIELD_MAGIC)
    n_q, n_p, q0, q1, p0, p1 = FIELD_HEADER.unpack_from(blob, off)
    off += FIELD_HEADER.size
    values = np.frombuffer(blob, dtype="<f8", count=n_q * n_p, offset=off).reshape(n_q, n_p)
    return PhaseSpaceField(q=np.linspace(q0, q1, n_q), p=np.linspace(p0, p1, n_p),
                           values=values.astype(float))


def write_points_csv(components: list[np.ndarray], path, header=("component", "q", "p")) -> Path:
    rows = ((k, float(q), float(p)) for k, comp in enumerate(components) for q, p in comp)
    return _write_rows(path, header, rows)


def write_table_csv(path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    return _write_rows(path, header, rows)


def write_measurement_csv(record: MeasurementRecord, path, experiment_offset: int = 0) -> Path:
    """Long-format sample records: experiment_id, sample_index, observable, value."""
    if not record.samples:
        raise ValueError("record carries no samples; rerun with keep_samples=True")
    observables = {"position": "q", "momentum": "p", "prism": "xi"}

    def rows():
        for e, name in enumerate(EXPERIMENTS):
            for i, v in enumerate(record.samples[name]):
                yield experiment_offset + e, i, observables[name], float(v)

    return _write_rows(path, ("experiment_id", "sample_index", "observable", "value"), rows())


def round_sig(x: float, digits: int = JSON_DIGITS) -> float:
    """Round to ``digits`` significant digits; non-finite values pass through."""
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits - 1}e}")


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = round_sig(float(obj))
        return x if math.isfinite(x) else None
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n")
    return path
