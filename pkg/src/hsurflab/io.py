"""Deterministic artifact writers (JSON, CSV, OBJ).

Floats are written with 17 significant digits so identical runs give
byte-identical files; non-finite floats become ``null`` in JSON and ``nan``
or ``inf`` in CSV.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

FLOAT_FMT = ".17g"


def fmt(x: float) -> str:
    return format(float(x), FLOAT_FMT)


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj) if np.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in sorted(obj.items())]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-digit floats."""
    return _encode(_plain(obj), indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return v


def write_columns(path, columns: dict) -> Path:
    """CSV from equal-length named columns."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    return write_csv(path, names, zip(*cols))


def write_obj(path, vertices, faces, comment: str | None = None) -> Path:
    """Wavefront OBJ with 1-based polygon faces."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for v in np.asarray(vertices, dtype=float):
            fh.write("v " + " ".join(fmt(c) for c in v) + "\n")
        for f in faces:
            fh.write("f " + " ".join(str(int(k) + 1) for k in f) + "\n")
    return path


def write_surface(path, surface, fields: dict | None = None) -> list:
    """OBJ mesh of a discrete surface plus a per-vertex CSV of ``fields``."""
    path = Path(path)
    out = [write_obj(path, surface.r, surface.faces(), comment=surface.kind)]
    cols = {"x": surface.r[:, 0], "y": surface.r[:, 1], "z": surface.r[:, 2],
            "interior": surface.interior.astype(int)}
    for k, v in (fields or {}).items():
        cols[k] = v
    out.append(write_columns(path.with_suffix(".csv"), cols))
    return out


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
