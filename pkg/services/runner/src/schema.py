"""
Scenario file schema.

A scenario is a TOML (or JSON) document with a required ``version = 1`` key,
a ``kind`` naming what to run, and one nested table per module it touches.
Unknown keys are rejected everywhere. Every violation is reported at once.
"""

from __future__ import annotations

import json
import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: tomli is the same parser under its pre-stdlib name
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from kinetex.config import DEFAULT_SEED
from kinetex.errors import KinetexError

ScenarioKind = Literal[
    "geometry_audit",
    "stencil_audit",
    "landau_build",
    "kfp_run",
    "landau_run",
    "viscosity_sweep",
]

SOLVER_KINDS = ("kfp_run", "landau_run", "viscosity_sweep")
MODE_CONFLICT = "exactly one mode may be given: [kfp] or [landau], not both"


class ScenarioFileError(KinetexError):
    exit_code = 1

    def __init__(self, message: str, violations: list[str] | None = None) -> None:
        super().__init__(message, module="runner")
        self.violations = violations or []


class ConfigMissingError(ScenarioFileError):
    exit_code = 2


class ConfigParseError(ScenarioFileError):
    exit_code = 3


class SchemaViolationError(ScenarioFileError):
    exit_code = 4


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(Strict):
    half_width: float = Field(4.0, gt=0)
    n: int = Field(17, ge=3)

    @field_validator("n")
    @classmethod
    def _odd(cls, n: int) -> int:
        if n % 2 == 0:
            raise ValueError("points per axis must be odd so the origin is a node")
        return n


class SlabSpec(Strict):
    length: float = Field(1.0, gt=0)
    n_x: int = Field(16, ge=2)


class ProfileSpec(Strict):
    """Phase-space profile: constant, Maxwellian, or Maxwellian with a cosine bump in x."""

    kind: Literal["constant", "maxwellian", "maxwellian_bump"] = "constant"
    amplitude: float = 0.0
    bump: float = Field(0.5, ge=0.0, le=1.0)


class GeometrySpec(Strict):
    presets: list[Literal["flat", "paraboloid", "sinusoidal", "expression"]] = Field(
        default_factory=lambda: ["flat", "paraboloid", "sinusoidal"], min_length=1
    )
    samples: int = Field(1000, ge=1)
    include_e3: bool = True
    params: dict[str, dict[str, float | str]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _expression_needs_text(self) -> GeometrySpec:
        if "expression" in self.presets and "expression" not in self.params.get("expression", {}):
            raise ValueError("the expression preset needs params.expression.expression = '<rho(y1, y2)>'")
        return self


class StencilSpec(Strict):
    samples: int = Field(1000, ge=1)
    delta: float = Field(0.2, gt=0, le=1)
    spacings: list[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1], min_length=2)


class LandauBuildSpec(Strict):
    grid: GridSpec = Field(default_factory=lambda: GridSpec(half_width=2.0, n=17))
    form: Literal["regularized", "symmetric"] = "symmetric"
    g_amplitude: float = 0.0
    margin: float | None = Field(None, gt=0)
    audit: bool = True
    export: bool = True
    export_format: Literal["binary", "csv"] = "binary"


class KfpSpec(Strict):
    a: list[list[float]] = Field(default_factory=lambda: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    b: list[float] | None = None
    delta: float | None = Field(None, gt=0, le=1)
    delta1: float | None = Field(None, ge=0)
    b_bound: float | None = Field(None, ge=0)

    @field_validator("a")
    @classmethod
    def _three_by_three(cls, a: list[list[float]]) -> list[list[float]]:
        if len(a) != 3 or any(len(row) != 3 for row in a):
            raise ValueError("a must be a 3x3 matrix")
        return a

    @field_validator("b")
    @classmethod
    def _three_vector(cls, b: list[float] | None) -> list[float] | None:
        if b is not None and len(b) != 3:
            raise ValueError("b must have three components")
        return b


class LandauSpec(Strict):
    nu: float = Field(gt=0)
    form: Literal["regularized", "symmetric"] = "symmetric"
    # g = g_amplitude * mu^(1/2)
    g_amplitude: float = 0.0


class SolverSpec(Strict):
    dt: float = Field(gt=0)
    t_final: float = Field(gt=0)
    lam: float = Field(0.0, ge=0)
    eps_bc: float = Field(0.0, ge=0, le=1)
    theta: float = Field(0.0, ge=0)
    scheme: Literal["implicit", "explicit"] = "implicit"
    closure: Literal["no_flux", "absorbing"] = "no_flux"
    collision: bool = True
    checkpoint_every: int | None = Field(None, ge=1)
    calibrate_lambda: bool = False
    initial: ProfileSpec = Field(default_factory=lambda: ProfileSpec(kind="maxwellian_bump", amplitude=1.0))
    source: ProfileSpec = Field(default_factory=ProfileSpec)

    @field_validator("dt", "t_final")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value


class SweepSpec(Strict):
    nus: list[float] = Field(min_length=2)

    @field_validator("nus")
    @classmethod
    def _decreasing(cls, nus: list[float]) -> list[float]:
        if any(nu <= 0 for nu in nus):
            raise ValueError("viscosities must be positive")
        if any(b > a for a, b in zip(nus, nus[1:])):
            raise ValueError("viscosities must be listed in decreasing order")
        return nus


class ScenarioConfig(Strict):
    version: Literal[1]
    kind: ScenarioKind
    name: str | None = None
    seed: int = Field(DEFAULT_SEED, ge=0)
    out: str | None = None
    threads: int = Field(1, ge=1)

    geometry: GeometrySpec | None = None
    stencil: StencilSpec | None = None
    landau_build: LandauBuildSpec | None = None

    grid: GridSpec = Field(default_factory=GridSpec)
    slab: SlabSpec = Field(default_factory=SlabSpec)
    solver: SolverSpec | None = None
    kfp: KfpSpec | None = None
    landau: LandauSpec | None = None
    sweep: SweepSpec | None = None

    @model_validator(mode="after")
    def _blocks_match_kind(self) -> ScenarioConfig:
        if self.kfp is not None and self.landau is not None:
            raise ValueError(MODE_CONFLICT)
        if self.kind not in SOLVER_KINDS:
            return self
        missing = []
        if self.solver is None:
            missing.append("[solver]")
        if self.kind == "kfp_run" and self.kfp is None:
            missing.append("[kfp]")
        if self.kind in ("landau_run", "viscosity_sweep") and self.landau is None:
            missing.append("[landau]")
        if self.kind == "viscosity_sweep" and self.sweep is None:
            missing.append("[sweep]")
        if missing:
            raise ValueError(f"kind {self.kind} needs {', '.join(missing)}")
        return self

    @property
    def run_name(self) -> str:
        return self.name or self.kind


def _violations(err: ValidationError) -> list[str]:
    out = []
    for item in err.errors():
        where = ".".join(str(part) for part in item["loc"]) or "<root>"
        out.append(f"{where}: {item['msg']}")
    return out


def _mode_conflicts(data: dict[str, Any]) -> list[str]:
    # Read off the raw table: a field error elsewhere keeps the model validator from running
    if data.get("kfp") is not None and data.get("landau") is not None:
        return [f"<root>: {MODE_CONFLICT}"]
    return []


def validate_config(data: dict[str, Any], source: str = "<config>") -> ScenarioConfig:
    conflicts = _mode_conflicts(data)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        violations = conflicts + [v for v in _violations(e) if not (conflicts and MODE_CONFLICT in v)]
        raise SchemaViolationError(
            f"{source}: {len(violations)} schema violation(s): " + "; ".join(violations), violations
        ) from e


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file (TOML, or JSON by suffix)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigMissingError(f"scenario file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigParseError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path} does not hold a table at the top level")
    return validate_config(data, str(path))


def dump_config(cfg: ScenarioConfig, path: str | Path) -> Path:
    """Write the fully populated config as JSON; parse_config reads it back unchanged."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cfg.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")
    return path


def config_schema() -> dict[str, Any]:
    return ScenarioConfig.model_json_schema()
