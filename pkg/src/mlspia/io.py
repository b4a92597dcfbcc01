"""Reading and writing point files and reports."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


class PointFileError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_points_csv(text: str, source: str = "<string>") -> np.ndarray:
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if lineno == 1 and not rows:
                continue  # header line
            raise PointFileError(f"{source}:{lineno}: cannot parse {','.join(row)!r} as numbers") from None
        if len(vals) not in (2, 3):
            raise PointFileError(f"{source}:{lineno}: expected 2 or 3 coordinates, got {len(vals)}")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise PointFileError(f"{source}:{lineno}: expected {width} coordinates, got {len(vals)}")
        if not all(np.isfinite(vals)):
            raise PointFileError(f"{source}:{lineno}: non-finite coordinate")
        rows.append(vals)
    if not rows:
        raise PointFileError(f"{source}: no points")
    return np.array(rows)


def parse_grid_json(text: str, source: str = "<string>") -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PointFileError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        pts = doc["points"]
    except (KeyError, TypeError, ValueError):
        raise PointFileError(f"{source}: grid JSON needs integer 'rows', 'cols' and a 'points' list") from None
    if rows < 1 or cols < 1:
        raise PointFileError(f"{source}: grid dimensions must be positive")
    # nested form: a list of rows, each a list of points
    if pts and isinstance(pts[0], list) and pts[0] and isinstance(pts[0][0], list):
        if len(pts) != rows:
            raise PointFileError(f"{source}: declared {rows} rows, found {len(pts)}")
        for i, r in enumerate(pts):
            if len(r) != cols:
                raise PointFileError(f"{source}: row {i} has {len(r)} points, expected {cols}")
        pts = [p for r in pts for p in r]
    if len(pts) != rows * cols:
        short = len(pts) // cols if cols else 0
        raise PointFileError(
            f"{source}: ragged grid, row {short} is incomplete ({len(pts)} points for {rows}x{cols})"
        )
    widths = {len(p) for p in pts}
    if len(widths) != 1 or widths.pop() not in (2, 3):
        raise PointFileError(f"{source}: all grid points need the same 2 or 3 coordinates")
    arr = np.array(pts, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise PointFileError(f"{source}: non-finite coordinate")
    return arr.reshape(rows, cols, -1)


def load_points(path, fmt: str | None = None) -> np.ndarray:
    """Points from CSV (``x,y[,z]`` per line) or a grid from JSON.

    Returns ``(m, d)`` for point lists and ``(rows, cols, d)`` for grids.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    text = path.read_text()
    if fmt == "csv":
        return parse_points_csv(text, str(path))
    if fmt == "json":
        return parse_grid_json(text, str(path))
    raise ValueError(f"unknown format {fmt!r}")


def points_to_csv(points) -> str:
    P = np.asarray(points, dtype=float)
    P = P.reshape(-1, P.shape[-1])
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in P)


def grid_to_json(grid) -> str:
    G = np.asarray(grid, dtype=float)
    doc = {"rows": G.shape[0], "cols": G.shape[1], "points": G.reshape(-1, G.shape[-1]).tolist()}
    return json.dumps(doc)


def save_points(path, points) -> None:
    P = np.asarray(points)
    if P.ndim == 3 and Path(path).suffix.lower() == ".json":
        atomic_write(path, grid_to_json(P))
    else:
        atomic_write(path, points_to_csv(P))


def history_to_csv(history) -> str:
    lines = ["k,E_k\n"]
    lines += [f"{r.k},{_fmt(r.error)}\n" for r in history]
    return "".join(lines)


def save_json(path, doc) -> None:
    atomic_write(path, json.dumps(doc, indent=2) + "\n")
