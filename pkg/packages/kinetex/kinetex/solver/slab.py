"""
Lie-split time stepping on the slab with per-step audits.

Each step traces the wall data, transports, applies the collision operator
and compares the result against the discrete energy inequality, the
maximum principle and (in Landau mode) the sigma-energy bound.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger

from ..checks import CheckResult
from ..errors import ConfigurationError, SolverError
from ..landau import LandauCoefficientSet, build_coefficients
from ..spaces import sigma_weighted_norm
from ..velocity import gradient_array
from . import config
from .collision import CollisionOperator
from .io import save_checkpoint
from .models import KfpMode, LandauMode, PhaseField, SolverConfig, StepDiagnostics, TraceRecord
from .transport import (
    TransportPlan,
    absorbed_energy,
    incoming_residual,
    transport_step,
    wall_fluxes,
    wall_mass_loss_rate,
    wall_traces,
)

TRACE_TOL = 1e-14


def velocity_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Centered velocity gradient of an (n_x, n, n, n) state, shape (n_x, n, n, n, 3)."""
    grad = gradient_array(np.moveaxis(values, 0, -1), h)
    return np.moveaxis(grad, 3, 0)


class SlabStepper:
    """Operators of one configuration plus the running audit bounds."""

    def __init__(
        self,
        cfg: SolverConfig,
        initial: PhaseField,
        coefficients: LandauCoefficientSet | None = None,
    ):
        self.cfg = cfg
        self.plan = TransportPlan(cfg.domain.n_x, cfg.domain.dx, cfg.grid.axis(), cfg.dt, cfg.eps_bc)
        self.specular = (
            TransportPlan(cfg.domain.n_x, cfg.domain.dx, cfg.grid.axis(), cfg.dt, 0.0) if cfg.eps_bc > 0 else None
        )
        self.operator = CollisionOperator(cfg, coefficients) if cfg.collision else None
        self.tight = cfg.eps_bc == 0.0 and (
            not cfg.collision or (cfg.lam == 0.0 and cfg.closure == "no_flux")
        )
        self.lo = float(initial.values.min())
        self.hi = float(initial.values.max())
        if not self.tight:
            self.lo, self.hi = min(self.lo, 0.0), max(self.hi, 0.0)
        self.initial_linf = initial.linf()
        self.source_sup = 0.0
        self.initial_energy = initial.energy(cfg.theta)
        self.accumulated_sigma = 0.0
        self.accumulated_source = 0.0
        self.landau_constant = 0.0

    @property
    def monotone(self) -> bool:
        return self.operator is None or self.operator.monotone

    @property
    def landau(self) -> bool:
        return self.operator is not None and self.operator.coefficients is not None

    def step(self, f: PhaseField) -> tuple[PhaseField, StepDiagnostics, TraceRecord]:
        cfg = self.cfg
        dt, theta = cfg.dt, cfg.theta
        trace = wall_traces(f, cfg.eps_bc)
        plus, minus = wall_fluxes(trace, f, theta)
        wall_rate = wall_mass_loss_rate(trace, f)
        star = transport_step(f, dt, plan=self.plan)
        trace = replace(trace, residual=incoming_residual(f, star, dt, cfg.eps_bc))
        t_new = f.t + dt

        if self.operator is not None:
            source = cfg.evaluate(cfg.source, t_new)
            result = self.operator.step(star, source)
            new = result.field
            forcing = source if result.explicit is None else source + result.explicit
            lam, floor = cfg.lam, max(self.operator.floor, 0.0)
            pairing = new.pairing(forcing, theta)
            dissipation = self.operator.dissipation(new.values, theta)
            trunc = self.operator.truncation_rate(new.values)
            balance = (
                float(np.sum(source)) * f.cell_measure
                - lam * float(np.sum(result.applied)) * f.cell_measure
                + self.operator.operator_mass_rate(result.applied, result.explicit)
            )
            iterations = result.iterations
        else:
            source = np.zeros(f.values.shape)
            new = star.with_values(star.values, t_new)
            lam = floor = pairing = dissipation = trunc = balance = 0.0
            iterations = 0

        e_old, e_new = f.energy(theta), new.energy(theta)
        wall_loss = sum(plus) - sum(minus)
        absorbed = absorbed_energy(f, self.plan, self.specular, theta) if self.specular is not None else 0.0
        # interpolation slack, capped by the charged wall loss
        slack = min(dt * wall_loss, max(0.0, dt * wall_loss - absorbed))
        energy_residual = (
            (e_new - e_old)
            + dt * wall_loss
            + 2.0 * dt * (0.5 * floor * dissipation + 0.5 * lam * e_new)
            - 2.0 * dt * pairing
            - slack
        )
        mass_residual = (new.mass() - f.mass()) - dt * balance + dt * wall_rate

        self.lo += dt * float(source.min())
        self.hi += dt * float(source.max())
        if not self.tight:
            self.lo, self.hi = min(self.lo, 0.0), max(self.hi, 0.0)
        maxprin = max(0.0, float(new.values.max()) - self.hi, self.lo - float(new.values.min()))
        self.source_sup = max(self.source_sup, float(np.max(np.abs(source))) if source.size else 0.0)
        if lam > 0:
            maxprin = max(maxprin, new.linf() - (self.initial_linf + self.source_sup / lam))

        landau_constant = None
        if self.landau:
            landau_constant = self._landau_audit(new, source, e_new)

        diag = StepDiagnostics(
            t=t_new,
            E_theta=e_new,
            dissipation=dissipation,
            linf=new.linf(),
            mass=new.mass(),
            flux_plus=sum(plus),
            flux_minus=sum(minus),
            trunc_flux=trunc,
            energy_residual=energy_residual,
            maxprin_residual=maxprin,
            mass_residual=mass_residual,
            trace_residual=trace.residual,
            transport_slack=slack,
            wall_flux_plus=plus,
            wall_flux_minus=minus,
            energy_scale=max(e_old, e_new, 2.0 * dt * abs(pairing)),
            landau_constant=landau_constant,
            extra={"iterations": iterations},
        )
        return new, diag, trace

    def _landau_audit(self, new: PhaseField, source: np.ndarray, e_new: float) -> float:
        cfg = self.cfg
        grid = cfg.grid
        grad = velocity_gradient(new.values, grid.spacing)
        sigma_norm = sigma_weighted_norm(
            new.values, grad, self.operator.coefficients.sigma, grid, cfg.theta, cfg.domain.dx
        )
        self.accumulated_sigma += cfg.dt * sigma_norm**2
        self.accumulated_source += cfg.dt * new.with_values(source).energy(cfg.theta)
        denominator = self.initial_energy + self.accumulated_source
        ratio = (e_new + config.LANDAU_AUDIT_C * self.accumulated_sigma) / denominator if denominator > 0 else 0.0
        self.landau_constant = max(self.landau_constant, ratio)
        return ratio


def advance(
    state: PhaseField, cfg: SolverConfig, stepper: SlabStepper | None = None
) -> tuple[PhaseField, StepDiagnostics]:
    """Transport then collide over one dt."""
    stepper = stepper or SlabStepper(cfg, state)
    new, diag, _ = stepper.step(state)
    return new, diag


@dataclass
class RunResult:
    cfg: SolverConfig
    diagnostics: list[StepDiagnostics]
    final: PhaseField
    checks: list[CheckResult]
    checkpoints: list[Path] = field(default_factory=list)
    landau_constant: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def energy_passed(self) -> bool:
        return all(d.energy_passed for d in self.diagnostics)

    def max_energy_residual(self) -> float:
        return max((d.energy_residual for d in self.diagnostics), default=0.0)

    def summary(self) -> dict:
        return {
            "steps": len(self.diagnostics),
            "t_final": self.final.t,
            "lambda": self.cfg.lam,
            "eps_bc": self.cfg.eps_bc,
            "dt": self.cfg.dt,
            "max_energy_residual": self.max_energy_residual(),
            "accumulated_mass_residual": float(sum(abs(d.mass_residual) for d in self.diagnostics)),
            "landau_constant": self.landau_constant,
            "passed": self.passed,
        }


def _run_checks(diagnostics: list[StepDiagnostics], stepper: SlabStepper) -> list[CheckResult]:
    tiny = np.finfo(float).tiny
    checks = [
        CheckResult(
            "slab.trace_residual",
            max((d.trace_residual for d in diagnostics), default=0.0),
            TRACE_TOL * max(1.0, stepper.initial_linf),
            "solver.incoming_residual",
        ),
        CheckResult(
            "slab.energy_inequality",
            max((d.energy_residual / max(d.energy_scale, tiny) for d in diagnostics), default=0.0),
            config.AUDIT_RTOL,
            "solver.SlabStepper.step",
            details={
                "lambda": stepper.cfg.lam,
                "failed_steps": sum(not d.energy_passed for d in diagnostics),
                "max_transport_slack": max((d.transport_slack for d in diagnostics), default=0.0),
            },
        ),
    ]
    if stepper.monotone:
        scale = max(1.0, stepper.initial_linf, abs(stepper.lo), abs(stepper.hi))
        checks.append(
            CheckResult(
                "slab.max_principle",
                max((d.maxprin_residual for d in diagnostics), default=0.0),
                config.AUDIT_RTOL * scale,
                "solver.SlabStepper.step",
                details={"tight": stepper.tight},
            )
        )
    if stepper.landau:
        checks.append(
            CheckResult(
                "slab.landau_energy",
                stepper.landau_constant,
                config.LANDAU_AUDIT_BOUND,
                "solver.SlabStepper._landau_audit",
                details={"c": config.LANDAU_AUDIT_C},
            )
        )
    return checks


def step_count(cfg: SolverConfig, t_final: float) -> int:
    if not np.isfinite(t_final) or t_final <= 0:
        raise ConfigurationError(f"t_final must be positive, got {t_final}", module="solver")
    return max(1, math.ceil(t_final / cfg.dt - 1e-9))


def run(
    cfg: SolverConfig,
    t_final: float,
    initial: PhaseField | None = None,
    coefficients: LandauCoefficientSet | None = None,
    checkpoint_dir: Path | None = None,
) -> RunResult:
    """Advance from the initial state to t_final in steps of cfg.dt."""
    steps = step_count(cfg, t_final)
    state = initial if initial is not None else PhaseField.initial(cfg)
    stepper = SlabStepper(cfg, state, coefficients)
    mode = "kfp" if isinstance(cfg.mode, KfpMode) else "landau"
    logger.info(
        "Starting {mode} run: {steps} steps of dt={dt}, n_x={n_x}, n={n}, lambda={lam}, eps={eps}",
        mode=mode,
        steps=steps,
        dt=cfg.dt,
        n_x=cfg.domain.n_x,
        n=cfg.grid.n,
        lam=cfg.lam,
        eps=cfg.eps_bc,
    )
    start = time.perf_counter()
    diagnostics: list[StepDiagnostics] = []
    checkpoints: list[Path] = []
    for k in range(1, steps + 1):
        state, diag, _ = stepper.step(state)
        diagnostics.append(diag)
        logger.debug(
            "step {k}: E={e:.6e} res={r:.3e} linf={linf:.6e}",
            k=k,
            e=diag.E_theta,
            r=diag.energy_residual,
            linf=diag.linf,
        )
        if checkpoint_dir is not None and cfg.checkpoint_every and k % cfg.checkpoint_every == 0:
            checkpoints += save_checkpoint(state, Path(checkpoint_dir) / f"checkpoint_{k:05d}.field", step=k)

    checks = _run_checks(diagnostics, stepper)
    logger.info(
        "Finished {mode} run in {elapsed:.2f}s: E={e:.6e}, max energy residual {r:.3e}",
        mode=mode,
        elapsed=time.perf_counter() - start,
        e=diagnostics[-1].E_theta,
        r=max(d.energy_residual for d in diagnostics),
    )
    return RunResult(
        cfg=cfg,
        diagnostics=diagnostics,
        final=state,
        checks=checks,
        checkpoints=checkpoints,
        landau_constant=stepper.landau_constant if stepper.landau else None,
    )


@dataclass
class LambdaCalibration:
    lam: float
    attempts: list[tuple[float, float, bool]]
    result: RunResult

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "attempts": [{"lambda": lam, "max_residual": res, "passed": ok} for lam, res, ok in self.attempts],
        }


def calibrate_lambda(
    cfg: SolverConfig,
    t_final: float,
    initial: PhaseField | None = None,
    start: float = config.LAMBDA_START,
    factor: float = config.LAMBDA_FACTOR,
    max_attempts: int = config.LAMBDA_MAX_ATTEMPTS,
    coefficients: LandauCoefficientSet | None = None,
) -> LambdaCalibration:
    """Raise lambda geometrically from cfg.lam until every step passes the energy audit."""
    if factor <= 1.0 or start <= 0:
        raise ConfigurationError("lambda search needs start > 0 and factor > 1", module="solver")
    lam = cfg.lam
    attempts: list[tuple[float, float, bool]] = []
    for _ in range(max_attempts):
        result = run(replace(cfg, lam=lam), t_final, initial, coefficients)
        ok = result.energy_passed
        attempts.append((lam, result.max_energy_residual(), ok))
        if ok:
            logger.info("Energy audit passes from lambda={lam:.4g} ({k} attempts)", lam=lam, k=len(attempts))
            return LambdaCalibration(lam, attempts, result)
        lam = max(lam * factor, start)
    raise SolverError(
        f"energy audit still fails at lambda={attempts[-1][0]:.4g} after {max_attempts} attempts",
        module="solver",
    )


@dataclass
class SweepReport:
    nus: list[float]
    gaps: list[float]
    constants: list[float]
    results: list[RunResult] = field(repr=False)
    checks: list[CheckResult]

    @property
    def cauchy_decreasing(self) -> bool:
        return all(b < a or (a == 0.0 and b == 0.0) for a, b in zip(self.gaps, self.gaps[1:]))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "nus": self.nus,
            "gaps": self.gaps,
            "constants": self.constants,
            "cauchy_decreasing": self.cauchy_decreasing,
            "checks": [c.to_dict() for c in self.checks],
        }


def vanishing_viscosity_sweep(
    cfg: SolverConfig,
    nus: Sequence[float],
    t_final: float,
    initial: PhaseField | None = None,
    coefficients: LandauCoefficientSet | None = None,
) -> SweepReport:
    """Landau runs for each nu; successive final-state gaps and the sigma-energy constants."""
    if not isinstance(cfg.mode, LandauMode):
        raise ConfigurationError("the viscosity sweep needs a Landau-mode configuration", module="solver")
    nus = [float(nu) for nu in nus]
    if len(nus) < 2 or any(b > a for a, b in zip(nus, nus[1:])):
        raise ConfigurationError(f"nu list must be decreasing with >= 2 entries, got {nus}", module="solver")
    coefficients = coefficients or build_coefficients(cfg.grid, cfg.mode.g, form=cfg.mode.form)
    results = [
        run(replace(cfg, mode=replace(cfg.mode, nu=nu)), t_final, initial, coefficients) for nu in nus
    ]
    gaps = []
    for a, b in zip(results, results[1:]):
        diff = a.final.with_values(a.final.values - b.final.values)
        gaps.append(math.sqrt(diff.energy(cfg.theta)))
    constants = [float(r.landau_constant or 0.0) for r in results]
    top = max(constants)
    spread = (top - min(constants)) / top if top > 0 else 0.0
    checks = [
        CheckResult(
            "sweep.cauchy_decreasing",
            max((b - a for a, b in zip(gaps, gaps[1:])), default=0.0),
            0.0,
            "solver.vanishing_viscosity_sweep",
            details={"gaps": gaps},
        ),
        CheckResult(
            "sweep.constant_spread",
            spread,
            config.SWEEP_CONSTANT_SPREAD,
            "solver.vanishing_viscosity_sweep",
            details={"constants": constants},
        ),
    ]
    for nu, result in zip(nus, results):
        checks += [replace(c, name=f"{c.name}[nu={nu:g}]") for c in result.checks]
    logger.info("Viscosity sweep over {nus}: gaps {gaps}", nus=nus, gaps=gaps)
    return SweepReport(nus, gaps, constants, results, checks)
