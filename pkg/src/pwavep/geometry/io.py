"""
Point-cloud file I/O.

Formats:
    xyz  - one "x y z [id]" row per line, whitespace separated, '#' comments.
           A "# label: <int>" comment carries the class label.
    ply  - ASCII PLY; vertex element with float x/y/z and optional int id.
    csv  - header row "x,y,z" or "id,x,y,z".

Coordinates are written with 17 significant digits so load(save(c))
reproduces them exactly. Ids are written only when they are not 0..N-1.
"""

import csv
import math
import os
from typing import List, Optional, Tuple

import numpy as np

from pwavep.core.errors import DataError, InvalidParameterError, ParseError
from pwavep.geometry.cloud import PointCloud

FORMATS = ("xyz", "ply", "csv")

_SUFFIXES = {".xyz": "xyz", ".txt": "xyz", ".pts": "xyz", ".ply": "ply", ".csv": "csv"}


def infer_format(path: str, format: Optional[str] = None) -> str:
    if format is not None:
        if format not in FORMATS:
            raise InvalidParameterError(f"Unknown format {format!r}; choose one of {FORMATS}.")
        return format
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in _SUFFIXES:
        raise InvalidParameterError(
            f"Cannot infer the format of {path!r}; pass format= one of {FORMATS}."
        )
    return _SUFFIXES[suffix]


def _float(path: str, lineno: int, token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(path, lineno, f"not a number: {token!r}")
    if not math.isfinite(value):
        raise DataError(f"{path}:{lineno}: non-finite coordinate {token!r}")
    return value


def _int(path: str, lineno: int, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(path, lineno, f"not an integer id: {token!r}")


def _build(path: str, points: List[Tuple[float, float, float]], ids: List[int],
           label: Optional[int]) -> PointCloud:
    if not points:
        raise ParseError(path, None, "file contains no points")
    if ids and len(ids) != len(points):
        raise ParseError(path, None, "either every row or no row must carry an id")
    return PointCloud(points=np.array(points), ids=np.array(ids) if ids else None, label=label)


def _load_xyz(path: str) -> PointCloud:
    points, ids = [], []
    label = None
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("label:"):
                    label = _int(path, lineno, body.split(":", 1)[1].strip())
                continue
            tokens = line.split()
            if len(tokens) not in (3, 4):
                raise ParseError(path, lineno, f"expected 3 or 4 columns, got {len(tokens)}")
            points.append(tuple(_float(path, lineno, t) for t in tokens[:3]))
            if len(tokens) == 4:
                ids.append(_int(path, lineno, tokens[3]))
    return _build(path, points, ids, label)


def _load_csv(path: str) -> PointCloud:
    points, ids = [], []
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise ParseError(path, 1, "empty file")
        if header not in (["x", "y", "z"], ["id", "x", "y", "z"]):
            raise ParseError(path, 1, f"header must be 'x,y,z' or 'id,x,y,z', got {header}")
        has_id = header[0] == "id"
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} columns, got {len(row)}")
            if has_id:
                ids.append(_int(path, lineno, row[0].strip()))
                row = row[1:]
            points.append(tuple(_float(path, lineno, c.strip()) for c in row))
    return _build(path, points, ids, None)


def _load_ply(path: str) -> PointCloud:
    with open(path, "r") as f:
        lines = f.readlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(path, 1, "missing 'ply' magic")

    vertex_count = None
    properties: List[str] = []
    in_vertex = False
    label = None
    body_start = None
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens:
            continue
        key = tokens[0]
        if key == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise ParseError(path, lineno, "only ascii PLY is supported")
        elif key == "comment":
            if len(tokens) >= 3 and tokens[1] == "label":
                label = _int(path, lineno, tokens[2])
        elif key == "element":
            if len(tokens) != 3:
                raise ParseError(path, lineno, "malformed element line")
            in_vertex = tokens[1] == "vertex"
            if in_vertex:
                vertex_count = _int(path, lineno, tokens[2])
        elif key == "property":
            if in_vertex:
                if len(tokens) != 3:
                    raise ParseError(path, lineno, "malformed property line")
                properties.append(tokens[2])
        elif key == "end_header":
            body_start = lineno
            break
        else:
            raise ParseError(path, lineno, f"unexpected header keyword {key!r}")

    if body_start is None:
        raise ParseError(path, None, "missing end_header")
    if vertex_count is None:
        raise ParseError(path, None, "no vertex element")
    try:
        cols = [properties.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise ParseError(path, None, "vertex element must declare x, y and z")
    id_col = properties.index("id") if "id" in properties else None

    points, ids = [], []
    lineno = body_start
    for raw in lines[body_start:]:
        lineno += 1
        if len(points) == vertex_count:
            break
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) < len(properties):
            raise ParseError(path, lineno, f"expected {len(properties)} values, got {len(tokens)}")
        points.append(tuple(_float(path, lineno, tokens[c]) for c in cols))
        if id_col is not None:
            ids.append(_int(path, lineno, tokens[id_col]))
    if len(points) != vertex_count:
        raise ParseError(path, lineno, f"expected {vertex_count} vertices, found {len(points)}")
    return _build(path, points, ids, label)


def load_cloud(path: str, format: Optional[str] = None) -> PointCloud:
    """
    Load a point cloud.

    Args:
        path: File to read
        format: "xyz", "ply" or "csv"; inferred from the suffix when omitted

    Returns:
        PointCloud

    Raises:
        ParseError: Malformed file (message names the line)
        DataError: Non-finite coordinate
    """
    format = infer_format(path, format)
    if not os.path.exists(path):
        raise DataError(f"Point-cloud file not found: {path}")
    loader = {"xyz": _load_xyz, "ply": _load_ply, "csv": _load_csv}[format]
    return loader(path)


def _default_ids(cloud: PointCloud) -> bool:
    return bool(np.array_equal(cloud.ids, np.arange(cloud.n)))


def save_cloud(cloud: PointCloud, path: str, format: Optional[str] = None) -> None:
    """
    Save a point cloud.

    Args:
        cloud: Cloud to write
        path: Destination file (parent directories are created)
        format: "xyz", "ply" or "csv"; inferred from the suffix when omitted
    """
    format = infer_format(path, format)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with_ids = not _default_ids(cloud)
    rows = [" ".join(f"{v:.17g}" for v in p) for p in cloud.points]

    with open(path, "w", newline="") as f:
        if format == "xyz":
            if cloud.label is not None:
                f.write(f"# label: {cloud.label}\n")
            for row, pid in zip(rows, cloud.ids):
                f.write(f"{row} {pid}\n" if with_ids else f"{row}\n")
        elif format == "ply":
            f.write("ply\nformat ascii 1.0\n")
            if cloud.label is not None:
                f.write(f"comment label {cloud.label}\n")
            f.write(f"element vertex {cloud.n}\n")
            f.write("property double x\nproperty double y\nproperty double z\n")
            if with_ids:
                f.write("property int id\n")
            f.write("end_header\n")
            for row, pid in zip(rows, cloud.ids):
                f.write(f"{row} {pid}\n" if with_ids else f"{row}\n")
        else:
            f.write("id,x,y,z\n" if with_ids else "x,y,z\n")
            for p, pid in zip(cloud.points, cloud.ids):
                values = ",".join(f"{v:.17g}" for v in p)
                f.write(f"{pid},{values}\n" if with_ids else f"{values}\n")
