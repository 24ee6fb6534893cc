"""Dispatch a validated scenario to the kinetex module that owns it."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from kinetex import __version__
from kinetex.checks import CheckResult
from kinetex.geometry import run_geometry_audit
from kinetex.landau import (
    LandauCoefficientSet,
    QuadratureSpec,
    build_coefficients,
    fit_sigma_bounds,
    maxwellian_values,
    run_landau_audit,
)
from kinetex.seeding import substream
from kinetex.solver import (
    KfpMode,
    LandauMode,
    PhaseField,
    SlabDomain,
    SolverConfig,
    StepDiagnostics,
    calibrate_lambda,
    run,
    vanishing_viscosity_sweep,
)
from kinetex.solver.models import FieldSource
from kinetex.stencil import run_stencil_audit
from kinetex.velocity import GridField, VelocityGrid

from .schema import GeometrySpec, LandauBuildSpec, ProfileSpec, ScenarioConfig, StencilSpec


@dataclass
class OutputRecord:
    """Everything a scenario produced, before it is written to disk."""

    scenario: dict[str, Any] = field(default_factory=dict)
    version: str = __version__
    checks: list[CheckResult] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, list[StepDiagnostics]] = field(default_factory=dict)
    fields: dict[str, PhaseField] = field(default_factory=dict)
    coefficients: LandauCoefficientSet | None = None
    table_format: str = "binary"
    # files already written while the scenario ran (checkpoints)
    artifacts: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def brief(self) -> dict[str, Any]:
        return {
            "kind": self.scenario.get("kind"),
            "passed": self.passed,
            "checks": [
                {"name": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed}
                for c in self.checks
            ],
        }


def profile_source(spec: ProfileSpec, length: float) -> FieldSource:
    if spec.kind == "constant":
        return spec.amplitude
    amplitude, bump = spec.amplitude, spec.bump
    if spec.kind == "maxwellian":
        return lambda t, x, v: amplitude * maxwellian_values(v) * np.ones_like(x)

    def bumped(t: float, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return amplitude * maxwellian_values(v) * (1.0 + bump * np.cos(2.0 * np.pi * x / length))

    return bumped


def perturbation(grid: VelocityGrid, amplitude: float) -> GridField | None:
    """g = amplitude * mu^(1/2), or None for the unperturbed operator."""
    if amplitude == 0.0:
        return None
    return GridField(grid, amplitude * np.sqrt(maxwellian_values(grid.mesh())))


def solver_config(cfg: ScenarioConfig) -> SolverConfig:
    assert cfg.solver is not None
    grid = VelocityGrid(cfg.grid.half_width, cfg.grid.n)
    domain = SlabDomain(cfg.slab.length, cfg.slab.n_x)
    mode: KfpMode | LandauMode
    if cfg.kfp is not None:
        mode = KfpMode(
            a=np.array(cfg.kfp.a),
            b=None if cfg.kfp.b is None else np.array(cfg.kfp.b),
            delta=cfg.kfp.delta,
            delta1=cfg.kfp.delta1,
            b_bound=cfg.kfp.b_bound,
        )
    else:
        assert cfg.landau is not None
        mode = LandauMode(nu=cfg.landau.nu, g=perturbation(grid, cfg.landau.g_amplitude), form=cfg.landau.form)
    s = cfg.solver
    return SolverConfig(
        domain=domain,
        grid=grid,
        mode=mode,
        dt=s.dt,
        lam=s.lam,
        eps_bc=s.eps_bc,
        source=profile_source(s.source, domain.length),
        initial=profile_source(s.initial, domain.length),
        theta=s.theta,
        scheme=s.scheme,
        closure=s.closure,
        collision=s.collision,
        threads=cfg.threads,
        checkpoint_every=s.checkpoint_every,
    )


def _geometry(cfg: ScenarioConfig, record: OutputRecord) -> None:
    spec = cfg.geometry or GeometrySpec()
    record.checks = run_geometry_audit(
        presets=tuple(spec.presets),
        samples=spec.samples,
        rng=substream(cfg.seed, "geometry"),
        include_e3=spec.include_e3,
        preset_params=spec.params,
    )
    record.summary = {"presets": list(spec.presets), "samples": spec.samples}


def _stencil(cfg: ScenarioConfig, record: OutputRecord) -> None:
    spec = cfg.stencil or StencilSpec()
    record.checks = run_stencil_audit(
        samples=spec.samples,
        delta=spec.delta,
        rng=substream(cfg.seed, "stencil"),
        consistency_spacings=tuple(spec.spacings),
    )
    record.summary = {"samples": spec.samples, "delta": spec.delta}


def _landau_build(cfg: ScenarioConfig, record: OutputRecord) -> None:
    spec = cfg.landau_build or LandauBuildSpec()
    quad = QuadratureSpec(margin=spec.margin) if spec.margin is not None else None
    if spec.audit:
        record.checks = run_landau_audit(
            half_width=spec.grid.half_width, n=spec.grid.n, rng=substream(cfg.seed, "landau"), quad=quad
        )
    grid = VelocityGrid(spec.grid.half_width, spec.grid.n)
    coeffs = build_coefficients(grid, perturbation(grid, spec.g_amplitude), quad=quad, form=spec.form)
    record.summary = {
        "grid": {"half_width": grid.half_width, "n": grid.n, "spacing": grid.spacing},
        "sigma_bounds": fit_sigma_bounds(coeffs.sigma, grid),
        "quadrature": coeffs.quadrature,
    }
    if spec.export:
        record.coefficients = coeffs
        record.table_format = spec.export_format


def _solver_run(cfg: ScenarioConfig, record: OutputRecord, out_dir: Path | None) -> None:
    assert cfg.solver is not None
    scfg = solver_config(cfg)
    coeffs = None
    if isinstance(scfg.mode, LandauMode):
        coeffs = build_coefficients(scfg.grid, scfg.mode.g, form=scfg.mode.form)
    t_final = cfg.solver.t_final
    if cfg.solver.calibrate_lambda:
        calibration = calibrate_lambda(scfg, t_final, coefficients=coeffs)
        result = calibration.result
        record.summary = {**result.summary(), "lambda_search": calibration.to_dict()}
    else:
        checkpoint_dir = out_dir / "checkpoints" if out_dir is not None and scfg.checkpoint_every else None
        result = run(scfg, t_final, coefficients=coeffs, checkpoint_dir=checkpoint_dir)
        record.summary = result.summary()
        record.artifacts = list(result.checkpoints)
    record.checks = result.checks
    record.diagnostics = {"diagnostics": result.diagnostics}
    record.fields = {"final": result.final}


def _sweep(cfg: ScenarioConfig, record: OutputRecord) -> None:
    assert cfg.solver is not None and cfg.sweep is not None
    scfg = solver_config(cfg)
    assert isinstance(scfg.mode, LandauMode)
    coeffs = build_coefficients(scfg.grid, scfg.mode.g, form=scfg.mode.form)
    report = vanishing_viscosity_sweep(scfg, cfg.sweep.nus, cfg.solver.t_final, coefficients=coeffs)
    record.checks = report.checks
    record.summary = {k: v for k, v in report.to_dict().items() if k != "checks"}
    record.diagnostics = {f"diagnostics_nu={nu:g}": r.diagnostics for nu, r in zip(report.nus, report.results)}
    record.fields = {"final": report.results[-1].final}


def run_scenario(cfg: ScenarioConfig, out_dir: Path | None = None) -> OutputRecord:
    """Run one scenario; module errors propagate as KinetexError."""
    record = OutputRecord(scenario=cfg.model_dump(mode="json", exclude={"out"}))
    logger.info("Running {kind} scenario (seed {seed})", kind=cfg.kind, seed=cfg.seed)
    if cfg.kind == "geometry_audit":
        _geometry(cfg, record)
    elif cfg.kind == "stencil_audit":
        _stencil(cfg, record)
    elif cfg.kind == "landau_build":
        _landau_build(cfg, record)
    elif cfg.kind in ("kfp_run", "landau_run"):
        _solver_run(cfg, record, out_dir)
    else:
        _sweep(cfg, record)
    return record
