"""Reading and writing curves, tangent fields, paths and reports.

Canonical format is JSON:

  curve:  {"manifold": {"kind": "euclidean"|"sphere", "ambient_dim": d},
           "times": [...], "points": [[...], ...]}
  field:  {"vectors": [[...], ...]}            (aligned with its curve)

CSV is an alternative curve input (one row per sample, first column the
time) and an export format for path grids (one row per (s, t) sample).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import manifold as manifold_mod
from .dcurve import DiscreteCurve, TangentField
from .elastic_metric import CurvePath


class ParseError(ValueError):
    """Input file failed to parse or validate; message carries the location."""


def _fail(path, what):
    raise ParseError(f"{path}: {what}")


def curve_to_json(c: DiscreteCurve) -> dict:
    return {
        "manifold": c.manifold.to_json(),
        "times": c.times.tolist(),
        "points": c.points.tolist(),
    }


def curve_from_json(obj: dict, source="<json>") -> DiscreteCurve:
    for key in ("manifold", "times", "points"):
        if key not in obj:
            _fail(source, f"missing field {key!r}")
    try:
        m = manifold_mod.from_json(obj["manifold"])
    except Exception as err:
        _fail(source, f"bad manifold descriptor: {err}")
    try:
        return DiscreteCurve(m, np.asarray(obj["times"], dtype=float),
                             np.asarray(obj["points"], dtype=float))
    except Exception as err:
        _fail(source, f"invalid curve: {err}")


def load_curve(path, manifold_override=None) -> DiscreteCurve:
    """Load a curve from .json or .csv; CSV needs a manifold from the caller."""
    path = Path(path)
    if not path.exists():
        _fail(path, "file not found")
    if path.suffix.lower() == ".csv":
        return _load_curve_csv(path, manifold_override)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        _fail(path, f"not valid JSON (line {err.lineno}, col {err.colno})")
    if manifold_override is not None:
        obj = dict(obj)
        obj["manifold"] = manifold_override.to_json()
    return curve_from_json(obj, source=str(path))


def _load_curve_csv(path, manifold_override) -> DiscreteCurve:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                if lineno == 1:
                    continue  # header line
                _fail(path, f"line {lineno}: non-numeric value")
    if not rows:
        _fail(path, "no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        _fail(path, "rows have inconsistent column counts")
    data = np.asarray(rows, dtype=float)
    m = manifold_override or manifold_mod.Euclidean(width - 1)
    try:
        return DiscreteCurve(m, data[:, 0], data[:, 1:])
    except Exception as err:
        _fail(path, f"invalid curve: {err}")


def save_curve(c: DiscreteCurve, path) -> None:
    Path(path).write_text(json.dumps(curve_to_json(c), indent=1) + "\n")


def load_field(path, curve: DiscreteCurve) -> TangentField:
    path = Path(path)
    if not path.exists():
        _fail(path, "file not found")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        _fail(path, f"not valid JSON (line {err.lineno}, col {err.colno})")
    if "vectors" not in obj:
        _fail(path, "missing field 'vectors'")
    try:
        return TangentField(curve, np.asarray(obj["vectors"], dtype=float))
    except Exception as err:
        _fail(path, f"field does not align with the curve: {err}")


def field_to_json(f: TangentField) -> dict:
    return {"vectors": f.vectors.tolist()}


def path_to_json(p: CurvePath) -> dict:
    return {
        "manifold": p.manifold.to_json(),
        "s_grid": p.s_grid.tolist(),
        "times": p.times.tolist(),
        "points": [c.points.tolist() for c in p.slices],
    }


def path_from_json(obj: dict, source="<json>") -> CurvePath:
    for key in ("manifold", "s_grid", "times", "points"):
        if key not in obj:
            _fail(source, f"missing field {key!r}")
    m = manifold_mod.from_json(obj["manifold"])
    times = np.asarray(obj["times"], dtype=float)
    slices = tuple(
        DiscreteCurve(m, times, np.asarray(pts, dtype=float)) for pts in obj["points"]
    )
    return CurvePath(np.asarray(obj["s_grid"], dtype=float), slices)


def save_path_csv(p: CurvePath, path) -> None:
    """Plot-ready matrix: one row per (s, t) sample: s, t, coordinates."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        d = p.manifold.ambient_dim
        writer.writerow(["s", "t"] + [f"x{i}" for i in range(d)])
        for s, c in zip(p.s_grid, p.slices):
            for t, pt in zip(c.times, c.points):
                writer.writerow([repr(float(s)), repr(float(t))] + [repr(float(x)) for x in pt])
