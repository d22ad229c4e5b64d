"""Field files, legacy VTK export and atomic writes.

A field file is a pair: ``<stem>.json`` holds the header (grid, layout, byte
count and SHA-256 digest) and ``<stem>.f64`` the raw little-endian float64
values in C order. Values round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import GridDomain, ScalarField

__all__ = [
    "FieldFileError",
    "atomic_write_bytes",
    "atomic_write_text",
    "write_field",
    "read_field",
    "vtk_text",
    "write_vtk",
]

FIELD_FORMAT = "sbpsolver-field"
FIELD_VERSION = 1


class FieldFileError(OSError):
    """Missing, truncated or corrupted field file; the message names the file."""


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_field(stem, f: ScalarField) -> Path:
    """Write ``f`` as ``<stem>.json`` + ``<stem>.f64``; returns the header path."""
    stem = Path(stem)
    raw = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    data_path = stem.with_suffix(".f64")
    header = {
        "format": FIELD_FORMAT,
        "version": FIELD_VERSION,
        "name": f.name,
        "lifted": bool(f.lifted),
        "grid": f.domain.to_dict(),
        "dtype": "<f8",
        "count": int(f.values.size),
        "nbytes": len(raw),
        "sha256": hashlib.sha256(raw).hexdigest(),
        "data": data_path.name,
    }
    atomic_write_bytes(data_path, raw)
    return atomic_write_text(stem.with_suffix(".json"), json.dumps(header, indent=2, sort_keys=True) + "\n")


def read_field(path) -> ScalarField:
    """Load a field file from its header path (or stem)."""
    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    try:
        header = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise FieldFileError(f"field header {path} is missing") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FieldFileError(f"field header {path} is not valid JSON: {exc}") from exc
    if header.get("format") != FIELD_FORMAT:
        raise FieldFileError(f"{path} is not a field header")
    data_path = path.parent / header["data"]
    try:
        raw = data_path.read_bytes()
    except FileNotFoundError as exc:
        raise FieldFileError(f"field data {data_path} is missing") from exc
    if len(raw) != header["nbytes"]:
        raise FieldFileError(
            f"field data {data_path} is truncated or padded: expected {header['nbytes']} bytes, found {len(raw)}"
        )
    if hashlib.sha256(raw).hexdigest() != header["sha256"]:
        raise FieldFileError(f"field data {data_path} does not match its checksum")
    g = header["grid"]
    domain = GridDomain(int(g["dim"]), tuple(g["n_per_axis"]), tuple(float(x) for x in g["lengths"]))
    values = np.frombuffer(raw, dtype="<f8").astype(float)
    return ScalarField(domain, values, lifted=bool(header["lifted"]), name=header.get("name", ""))


def vtk_text(fields: dict[str, ScalarField], title: str = "sbpsolver") -> str:
    """Legacy ASCII VTK ``STRUCTURED_POINTS`` with one ``SCALARS`` block per field.

    Boundary layers are included, so an ``n``-node axis has ``n + 2`` points.
    Grids of dimension below 3 are padded with unit axes.
    """
    if not fields:
        raise ValueError("no fields to export")
    domains = {f.domain for f in fields.values()}
    if len(domains) != 1:
        raise ValueError("all exported fields must share one grid")
    d = domains.pop()
    dims = list(d.full_shape) + [1] * (3 - d.dim)
    spacing = list(d.spacing) + [1.0] * (3 - d.dim)
    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS {} {} {}".format(*dims),
        "ORIGIN 0 0 0",
        "SPACING {} {} {}".format(*(repr(float(h)) for h in spacing)),
        f"POINT_DATA {int(np.prod(dims))}",
    ]
    for name, f in fields.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        # VTK runs x fastest, the arrays here run x slowest
        vals = f.full().transpose().ravel()
        lines.extend(repr(float(v)) for v in vals)
    return "\n".join(lines) + "\n"


def write_vtk(path, fields: dict[str, ScalarField], title: str = "sbpsolver") -> Path:
    return atomic_write_text(path, vtk_text(fields, title))
