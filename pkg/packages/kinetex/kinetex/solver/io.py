"""
Checkpoints and the per-step diagnostics CSV.

A checkpoint is the raw little-endian float64 dump of the (n_x, n, n, n)
state next to a JSON header ``<path>.json`` with {t, L, n_x, V, n, step}.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np
from loguru import logger

from ..errors import DataError
from ..velocity import VelocityGrid
from ..velocity.io import header_path
from . import config
from .models import PhaseField, SlabDomain, StepDiagnostics


def save_checkpoint(state: PhaseField, path: Path, step: int | None = None) -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(state.values, dtype="<f8").tobytes())
    header = {
        "t": state.t,
        "L": state.domain.length,
        "n_x": state.domain.n_x,
        "V": state.grid.half_width,
        "n": state.grid.n,
        "step": step,
    }
    hdr = header_path(path)
    hdr.write_text(json.dumps(header, indent=2, sort_keys=True))
    logger.debug("Wrote checkpoint {path} at t={t:.6g}", path=str(path), t=state.t)
    return [path, hdr]


def load_checkpoint(path: Path) -> PhaseField:
    path = Path(path)
    try:
        header = json.loads(header_path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"missing checkpoint header for {path}: {e}", module="solver") from e
    domain = SlabDomain(float(header["L"]), int(header["n_x"]))
    grid = VelocityGrid(float(header["V"]), int(header["n"]))
    flat = np.frombuffer(path.read_bytes(), dtype="<f8")
    shape = (domain.n_x, *grid.shape)
    if flat.size != int(np.prod(shape)):
        raise DataError(f"{path} holds {flat.size} values, header promises {shape}", module="solver")
    return PhaseField(domain, grid, flat.reshape(shape).copy(), float(header["t"]))


def write_diagnostics_csv(diagnostics: Iterable[StepDiagnostics], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(config.DIAGNOSTIC_COLUMNS)
        for row in diagnostics:
            writer.writerow([repr(value) for value in row.row()])
    return path


def read_diagnostics_csv(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != config.DIAGNOSTIC_COLUMNS:
        raise DataError(f"{path} is not a diagnostics table", module="solver")
    data = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, len(rows[0]))
    return {name: data[:, i] for i, name in enumerate(rows[0])}
