"""Deterministic CSV and JSON writers (full precision, no timestamps)."""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

FLOAT_FORMAT = "%.17g"


def _scalar(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = FLOAT_FORMAT % x
    if text in ("-0",):
        return "-0.0"
    return text


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, enum.Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _scalar(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist() if obj.dtype != np.longdouble else [float(v) for v in obj.ravel()]
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(to_json(obj) + "\n")
    return path


def write_csv(path, columns: Dict[str, Sequence]) -> Path:
    """Columns of equal length written with 17 significant digits."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(names),
               comments="")
    return path


def read_csv(path) -> Dict[str, np.ndarray]:
    arr = np.genfromtxt(path, delimiter=",", names=True)
    return {k: np.asarray(arr[k]) for k in arr.dtype.names}
