"""Plain-text file formats.  Every file starts with a versioned header line and
every write goes through a temporary file followed by an atomic rename.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from . import hyperbolic as hg
from .douady_earle import BoundaryMap
from .errors import InputError
from .flow import Diagnostics
from .mesh import MapField, Mesh


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


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _num(x: float) -> str:
    return repr(float(x))


def _read_lines(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return [ln.strip() for ln in text.splitlines() if ln.strip()]


def _header(lines, kind, path):
    if not lines or not lines[0].startswith(f"# {kind} v1"):
        raise InputError(f"{path}: expected header '# {kind} v1 ...'")
    return dict(re.findall(r"(\w+)=(\S+)", lines[0]))


def _floats(line, n, path):
    parts = line.split(",")
    if len(parts) != n:
        raise InputError(f"{path}: malformed line {line!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"{path}: malformed line {line!r}") from exc


# mesh -----------------------------------------------------------------------

def write_mesh(path, mesh: Mesh) -> None:
    out = [f"# mesh v1 R_max={_num(mesh.R_max)} h={_num(mesh.h)}", "#vertices"]
    out += [f"{i},{_num(z.real)},{_num(z.imag)}" for i, z in enumerate(mesh.vertices)]
    out.append("#triangles")
    out += [f"{a},{b},{c}" for a, b, c in mesh.triangles]
    out.append("#boundary")
    out += [str(i) for i in np.flatnonzero(mesh.boundary)]
    atomic_write(path, "\n".join(out) + "\n")


def read_mesh(path) -> Mesh:
    lines = _read_lines(path)
    meta = _header(lines, "mesh", path)
    sections = {"#vertices": [], "#triangles": [], "#boundary": []}
    cur = None
    for ln in lines[1:]:
        if ln in sections:
            cur = sections[ln]
        elif cur is None:
            raise InputError(f"{path}: data before the first section")
        else:
            cur.append(ln)
    verts = np.array([_floats(ln, 3, path) for ln in sections["#vertices"]])
    if len(verts) == 0 or not np.array_equal(verts[:, 0], np.arange(len(verts))):
        raise InputError(f"{path}: vertex ids must be 0..n-1 in order")
    tri = np.array([[int(v) for v in _floats(ln, 3, path)] for ln in sections["#triangles"]], dtype=np.int64)
    bnd = np.zeros(len(verts), dtype=bool)
    bnd[[int(ln) for ln in sections["#boundary"]]] = True
    try:
        return Mesh(verts[:, 1] + 1j * verts[:, 2], tri, bnd, float(meta["R_max"]), float(meta["h"]))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# map fields ----------------------------------------------------------------

def write_mapfield(path, u: MapField) -> None:
    out = [f"# mapfield v1 K={_num(u.space.K)}"]
    out += [f"{i},{_num(z.real)},{_num(z.imag)}" for i, z in enumerate(u.points)]
    atomic_write(path, "\n".join(out) + "\n")


def read_mapfield(path) -> MapField:
    lines = _read_lines(path)
    meta = _header(lines, "mapfield", path)
    rows = np.array([_floats(ln, 3, path) for ln in lines[1:]])
    if len(rows) == 0 or not np.array_equal(rows[:, 0], np.arange(len(rows))):
        raise InputError(f"{path}: vertex ids must be 0..n-1 in order")
    try:
        return MapField(rows[:, 1] + 1j * rows[:, 2], hg.Space(float(meta["K"])))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# boundary maps -------------------------------------------------------------

def write_boundary(path, bm: BoundaryMap) -> None:
    out = [f"# boundary-map v1 M={bm.M}"]
    out += [f"{_num(t)},{_num(p)}" for t, p in zip(bm.theta, bm.phi)]
    atomic_write(path, "\n".join(out) + "\n")


def read_boundary(path) -> BoundaryMap:
    lines = _read_lines(path)
    meta = _header(lines, "boundary-map", path)
    rows = np.array([_floats(ln, 2, path) for ln in lines[1:]])
    if "M" not in meta or int(meta["M"]) != len(rows):
        raise InputError(f"{path}: header count does not match {len(rows)} samples")
    return BoundaryMap(rows[:, 0], rows[:, 1], None, Path(path).stem)


# diagnostics and reports ---------------------------------------------------

def diagnostics_csv(diag: Diagnostics) -> str:
    buf = io.StringIO()
    buf.write("# diagnostics v1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(Diagnostics.COLUMNS)
    for r in diag.records:
        w.writerow([_num(r[c]) for c in Diagnostics.COLUMNS])
    return buf.getvalue()


def write_diagnostics(path, diag: Diagnostics) -> None:
    atomic_write(path, diagnostics_csv(diag))


def read_diagnostics(path) -> Diagnostics:
    lines = _read_lines(path)
    _header(lines, "diagnostics", path)
    rows = list(csv.DictReader(lines[1:]))
    if not rows or tuple(rows[0].keys()) != Diagnostics.COLUMNS:
        raise InputError(f"{path}: unexpected columns")
    return Diagnostics([{k: float(v) for k, v in r.items()} for r in rows])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, payload: dict, kind: str) -> None:
    doc = {"format": f"{kind} v1", **_jsonable(payload)}
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
