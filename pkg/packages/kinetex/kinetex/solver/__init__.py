"""
Slab-domain kinetic solver: semi-Lagrangian transport with eps-relaxed
specular walls, cell-wise implicit velocity collisions (KFP or linearized
Landau) and per-step audits.

Usage:
    from kinetex.solver import KfpMode, SlabDomain, SolverConfig, run

    cfg = SolverConfig(SlabDomain(1.0, 16), VelocityGrid(4.0, 17), KfpMode(np.eye(3)), dt=0.01, lam=1.0)
    result = run(cfg, t_final=0.5)
"""

from .collision import CollisionOperator, CollisionResult, collision_step
from .io import load_checkpoint, read_diagnostics_csv, save_checkpoint, write_diagnostics_csv
from .models import (
    KfpMode,
    LandauMode,
    PhaseField,
    SlabDomain,
    SolverConfig,
    StepDiagnostics,
    TraceRecord,
)
from .slab import (
    LambdaCalibration,
    RunResult,
    SlabStepper,
    SweepReport,
    advance,
    calibrate_lambda,
    run,
    vanishing_viscosity_sweep,
    velocity_gradient,
)
from .transport import (
    TransportPlan,
    absorbed_energy,
    incoming_residual,
    trace_foot,
    transport_step,
    unfold,
    wall_fluxes,
    wall_traces,
)

__all__ = [
    "CollisionOperator",
    "CollisionResult",
    "KfpMode",
    "LambdaCalibration",
    "LandauMode",
    "PhaseField",
    "RunResult",
    "SlabDomain",
    "SlabStepper",
    "SolverConfig",
    "StepDiagnostics",
    "SweepReport",
    "TraceRecord",
    "TransportPlan",
    "absorbed_energy",
    "advance",
    "calibrate_lambda",
    "collision_step",
    "incoming_residual",
    "load_checkpoint",
    "read_diagnostics_csv",
    "run",
    "save_checkpoint",
    "trace_foot",
    "transport_step",
    "unfold",
    "vanishing_viscosity_sweep",
    "velocity_gradient",
    "wall_fluxes",
    "wall_traces",
    "write_diagnostics_csv",
]
