"""
GridField serialization.

A field is stored as a flat little-endian float64 binary (or CSV) of its
values in lexicographic (i1, i2, i3) order, channel index fastest, next to a
JSON header ``<path>.json`` holding {V, n, channels, format}.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger

from ..errors import DataError, StructuralError
from .grid import GridField, VelocityGrid

FieldFormat = Literal["binary", "csv"]


def header_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_table(
    grid: VelocityGrid,
    values: np.ndarray,
    path: Path,
    fmt: FieldFormat = "binary",
    extra: dict | None = None,
) -> list[Path]:
    """Write an (n, n, n) or (n, n, n, c) table and its header; returns written paths."""
    values = np.asarray(values, dtype=float)
    if values.shape[:3] != grid.shape:
        raise StructuralError(
            f"table shape {values.shape} does not match grid {grid.shape}", module="velocity"
        )
    channels = 1 if values.ndim == 3 else int(np.prod(values.shape[3:]))
    flat = values.reshape(grid.n**3, channels)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "binary":
        path.write_bytes(flat.astype("<f8").tobytes())
    elif fmt == "csv":
        np.savetxt(path, flat, delimiter=",", fmt="%.17g")
    else:
        raise StructuralError(f"unknown field format {fmt!r}", module="velocity")
    header = {"V": grid.half_width, "n": grid.n, "channels": channels, "format": fmt}
    if extra:
        header.update(extra)
    hdr = header_path(path)
    hdr.write_text(json.dumps(header, indent=2, sort_keys=True))
    logger.debug("Wrote table {path} ({channels} channels)", path=str(path), channels=channels)
    return [path, hdr]


def load_table(path: Path) -> tuple[VelocityGrid, np.ndarray, dict]:
    path = Path(path)
    try:
        header = json.loads(header_path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"missing header for {path}: {e}", module="velocity") from e
    grid = VelocityGrid(half_width=float(header["V"]), n=int(header["n"]))
    channels = int(header.get("channels", 1))
    if header.get("format", "binary") == "csv":
        flat = np.loadtxt(path, delimiter=",", ndmin=2)
    else:
        flat = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = grid.n**3 * channels
    if flat.size != expected:
        raise DataError(
            f"{path} holds {flat.size} values, header promises {expected}", module="velocity"
        )
    shape = grid.shape if channels == 1 else (*grid.shape, channels)
    return grid, np.array(flat, dtype=float).reshape(shape), header


def save_field(field: GridField, path: Path, fmt: FieldFormat = "binary") -> list[Path]:
    return save_table(field.grid, field.values, path, fmt)


def load_field(path: Path) -> GridField:
    grid, values, header = load_table(path)
    if header.get("channels", 1) != 1:
        raise StructuralError(f"{path} is a multi-channel table", module="velocity")
    return GridField(grid, values)
