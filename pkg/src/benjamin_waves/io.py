"""Deterministic JSON and CSV persistence for fields and reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .spectral import Field, Grid


def format_float(x):
    """17 significant digits, enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Path):
        return json.dumps(str(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with floats printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def grid_sidecar(path):
    path = Path(path)
    return path.with_name(path.stem + ".grid.json")


def write_field_csv(path, field):
    """Write ``x,value`` rows plus a ``<stem>.grid.json`` sidecar; return both paths."""
    path = Path(path)
    lines = ["x,value"]
    lines += [f"{format_float(x)},{format_float(v)}" for x, v in zip(field.grid.x, field.values)]
    path.write_text("\n".join(lines) + "\n")
    side = write_json(grid_sidecar(path),
                      {"n": field.grid.n, "half_length": field.grid.half_length})
    return [path, side]


def read_field_csv(path, grid=None):
    """Read a field written by :func:`write_field_csv`."""
    path = Path(path)
    if grid is None:
        meta = read_json(grid_sidecar(path))
        grid = Grid(int(meta["n"]), float(meta["half_length"]))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n:
        raise ValueError(f"{path}: {data.shape[0]} samples, grid expects {grid.n}")
    return Field(grid, data[:, 1])


def write_table_csv(path, header, rows):
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
