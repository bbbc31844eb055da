"""JSON readers and deterministic writers.

Space files look like ``{"points": [[...], ...], "cost": "sqeuclidean" |
[[...]], "epsilon": e}``; measure files like ``{"points": [[...]],
"weights": [...]}``. Tangent files carry ``weights`` only.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .core import GroundSpace, Measure, TangentVector, build_space
from .errors import InputError, InvalidMeasure

LOAD_MASS_TOL = 1e-6


class ParseError(InputError):
    """A file could not be read as the expected format."""


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc


def _points(raw, name):
    try:
        pts = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: points must be numeric") from exc
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ParseError(f"{name}: points must be a list of coordinate lists")
    return pts


def space_from_dict(data, epsilon=None, name="space") -> GroundSpace:
    if not isinstance(data, dict):
        raise ParseError(f"{name}: expected an object")
    eps = data.get("epsilon") if epsilon is None else epsilon
    if eps is None:
        raise ParseError(f"{name}: missing epsilon")
    cost = data.get("cost", "sqeuclidean")
    points = data.get("points")
    pts = None if points is None or len(points) == 0 else _points(points, name)
    if not isinstance(cost, str):
        try:
            cost = np.asarray(cost, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{name}: cost must be 'sqeuclidean' or a matrix") from exc
    return build_space(pts, cost, float(eps), check_psd=not isinstance(cost, str))


def measure_from_dict(data, space: GroundSpace | None = None, epsilon=None, name="measure") -> Measure:
    """Read a measure, placing its weights on the points of ``space``.

    Without ``space`` the measure gets its own squared Euclidean space
    built from its points and ``epsilon``.
    """
    if not isinstance(data, dict) or "weights" not in data:
        raise ParseError(f"{name}: expected an object with weights")
    try:
        w = np.asarray(data["weights"], dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: weights must be numeric") from exc
    points = data.get("points")
    if space is None:
        if points is None or epsilon is None:
            raise ParseError(f"{name}: needs points and epsilon when no space is given")
        space = build_space(_points(points, name), "sqeuclidean", epsilon)
        full = w
    elif points is None:
        full = w
    else:
        if space.points is None:
            raise ParseError(f"{name}: the space has no coordinates to match points against")
        pts = _points(points, name)
        if pts.shape[0] != w.shape[0]:
            raise ParseError(f"{name}: points and weights differ in length")
        full = np.zeros(space.n)
        for p, wi in zip(pts, w):
            hit = np.flatnonzero(np.all(np.abs(space.points - p) <= 1e-12, axis=1))
            if hit.size == 0:
                raise ParseError(f"{name}: point {p.tolist()} is not a point of the space")
            full[hit[0]] += wi
    if full.shape[0] != space.n:
        raise ParseError(f"{name}: {full.shape[0]} weights for {space.n} points")
    try:
        return Measure.normalized(space, full, rtol=LOAD_MASS_TOL)
    except InvalidMeasure as exc:
        raise ParseError(f"{name}: {exc}") from exc


def tangent_from_dict(data, space: GroundSpace, name="tangent") -> TangentVector:
    if not isinstance(data, dict) or "weights" not in data:
        raise ParseError(f"{name}: expected an object with weights")
    w = np.asarray(data["weights"], dtype=float).reshape(-1)
    if w.shape[0] != space.n:
        raise ParseError(f"{name}: {w.shape[0]} weights for {space.n} points")
    scale = max(1.0, float(np.abs(w).sum()))
    if abs(w.sum()) > LOAD_MASS_TOL * scale:
        raise ParseError(f"{name}: weights sum to {w.sum():.3e}, not 0")
    nz = w != 0
    if nz.any():
        w = w.copy()
        w[nz] -= w.sum() / nz.sum()
    return TangentVector(space, w)


def load_space(path, epsilon=None) -> GroundSpace:
    return space_from_dict(read_json(path), epsilon, name=str(path))


def load_measure(path, space=None, epsilon=None) -> Measure:
    return measure_from_dict(read_json(path), space, epsilon, name=str(path))


def load_tangent(path, space) -> TangentVector:
    return tangent_from_dict(read_json(path), space, name=str(path))


def measure_to_dict(mu: Measure) -> dict:
    out = {"weights": mu.weights.tolist()}
    if mu.space.points is not None:
        out["points"] = mu.space.points.tolist()
    return out


# ---------------------------------------------------------------------------
# deterministic output


def fmt(x) -> str:
    """Float with 17 significant digits; integers and specials kept readable."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0) -> str:
    """JSON text with every float printed to 17 significant digits."""
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
        items = [pad + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return fmt(obj)


def write_csv(path_or_file, columns, rows, params=None):
    """Write a CSV with an optional ``# key=value`` parameter line and a header row."""
    lines = []
    if params:
        lines.append("# " + " ".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in params.items()))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
