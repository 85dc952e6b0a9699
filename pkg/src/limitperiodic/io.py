"""File formats: JSON with 17-significant-digit floats, CSV for potentials and densities."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import mpmath
import numpy as np

from . import precision
from .odometer import SamplingFunction, make_chain


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = f"{x:.17g}"
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits.

    mpmath numbers become decimal strings carrying the current working precision.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, mpmath.mpf):
        return json.dumps(precision.to_string(obj, mpmath.mp.prec))
    return json.dumps(str(obj))


def write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def write_json(path, obj):
    write_text(path, dumps(obj) + "\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_function(path) -> SamplingFunction:
    """A sampling function from JSON ``{"periods", "level", "values"}``.

    A bare ``{"values": [...]}`` record, or a ``.csv`` file of ``n,V`` rows covering one
    period, is read as a single-level chain with that period.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        values, _ = read_potential_csv(path)
        return SamplingFunction(make_chain([len(values)]), 1, np.asarray(values, dtype=float))
    data = read_json(path)
    if "periods" not in data:
        if "values" not in data:
            raise ValueError(f"{path}: expected a 'values' field")
        vals = np.asarray(data["values"], dtype=float)
        return SamplingFunction(make_chain([len(vals)]), 1, vals)
    return SamplingFunction.from_dict(data)


def write_potential_csv(path, values, start: int = 0):
    rows = ["n,V"]
    for i, v in enumerate(values):
        if isinstance(v, mpmath.mpf):
            rows.append(f"{start + i},{precision.to_string(v, mpmath.mp.prec)}")
        else:
            rows.append(f"{start + i},{format_float(v)}")
    write_text(path, "\n".join(rows) + "\n")


def read_potential_csv(path) -> tuple[list, int]:
    """``(values, start)`` with ``values[i] = V(start + i)``; rows must be consecutive."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if rows and not rows[0][0].lstrip("-").isdigit():
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    ns = [int(r[0]) for r in rows]
    if ns != list(range(ns[0], ns[0] + len(ns))):
        raise ValueError(f"{path}: site indices must be consecutive")
    vals = []
    for r in rows:
        txt = r[1].strip()
        if len(txt) <= 25:
            vals.append(float(txt))
        else:
            # keep every written digit
            with mpmath.workdps(len(txt) + 5):
                vals.append(mpmath.mpf(txt))
    return vals, ns[0]


def write_density_csv(path, profile):
    rows = ["E,k,g"]
    for E, k, g in profile.rows():
        rows.append(f"{format_float(E)},{format_float(k)},{format_float(g)}")
    write_text(path, "\n".join(rows) + "\n")
