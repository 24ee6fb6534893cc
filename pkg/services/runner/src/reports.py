"""
Writes an OutputRecord to a directory.

Layout:
    summary.json            scenario echo, version, checks, summary, manifest
    <stem>.csv              per-step diagnostics (one file per run)
    <stem>.field(.json)     phase-space states
    tables/                 Landau coefficient tables
    checkpoints/            written during the run, listed in the manifest

summary.json holds no wall-clock data, so reruns hash identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from kinetex.errors import DataError
from kinetex.landau import export_tables
from kinetex.solver import save_checkpoint, write_diagnostics_csv

from .scenarios import OutputRecord

SUMMARY_NAME = "summary.json"


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    sha256: str
    bytes: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    return str(value)


def _entry(path: Path, root: Path) -> ManifestEntry:
    data = path.read_bytes()
    try:
        name = path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        name = path.as_posix()
    return ManifestEntry(name, hashlib.sha256(data).hexdigest(), len(data))


def emit_reports(record: OutputRecord, directory: str | Path) -> list[ManifestEntry]:
    """Write every artifact of `record` and return the manifest (summary.json last)."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        for stem, diagnostics in record.diagnostics.items():
            written.append(write_diagnostics_csv(diagnostics, directory / f"{stem}.csv"))
        for stem, state in record.fields.items():
            written += save_checkpoint(state, directory / f"{stem}.field")
        if record.coefficients is not None:
            written += export_tables(record.coefficients, directory / "tables", record.table_format)
        written += record.artifacts
        manifest = [_entry(p, directory) for p in written]

        summary = {
            "scenario": record.scenario,
            "kinetex_version": record.version,
            "passed": record.passed,
            "checks": [c.to_dict() for c in record.checks],
            "summary": record.summary,
            "manifest": [e.to_dict() for e in manifest],
        }
        summary_path = directory / SUMMARY_NAME
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable) + "\n")
        manifest.append(_entry(summary_path, directory))
    except OSError as e:
        raise DataError(f"cannot write reports to {directory}: {e}", module="runner") from e
    logger.info("Wrote {count} report file(s) to {dir}", count=len(manifest), dir=str(directory))
    return manifest
