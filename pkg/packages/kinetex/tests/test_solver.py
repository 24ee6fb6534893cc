import math
from dataclasses import replace

import numpy as np
import pytest

from kinetex.errors import (
    ConfigurationError,
    EllipticityError,
    SolverError,
    StepSizeError,
    StructuralError,
)
from kinetex.landau import build_coefficients
from kinetex.solver import (
    CollisionOperator,
    KfpMode,
    LandauMode,
    PhaseField,
    SlabDomain,
    SolverConfig,
    TransportPlan,
    advance,
    calibrate_lambda,
    collision_step,
    incoming_residual,
    load_checkpoint,
    read_diagnostics_csv,
    run,
    trace_foot,
    transport_step,
    unfold,
    vanishing_viscosity_sweep,
    wall_fluxes,
    wall_traces,
    write_diagnostics_csv,
)
from kinetex.solver import config, slab
from kinetex.velocity import VelocityGrid


def gaussian(t, x, v):
    return np.exp(-np.sum(v**2, axis=-1)) * (1.0 + 0.5 * np.cos(2 * np.pi * x))


def wall_profile(t, x, v):
    return np.exp(-np.sum(v**2, axis=-1)) * (1.0 + x**2)


def make_cfg(small_grid, **overrides):
    base = dict(
        domain=SlabDomain(1.0, 4),
        grid=small_grid,
        mode=KfpMode(np.eye(3)),
        dt=0.1,
        initial=gaussian,
    )
    base.update(overrides)
    return SolverConfig(**base)


# ---------------------------------------------------------------------------
# configuration


def test_domain_validation():
    assert SlabDomain(2.0, 8).dx == 0.25
    assert np.allclose(SlabDomain(1.0, 4).centers(), [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(ConfigurationError):
        SlabDomain(0.0, 4)
    with pytest.raises(ConfigurationError):
        SlabDomain(1.0, 1)


def test_kfp_mode_validation():
    mode = KfpMode(np.diag([0.5, 1.0, 2.0]))
    assert mode.delta == 0.5
    assert mode.floor == pytest.approx(0.5 / 8)
    assert not mode.has_drift
    skew = np.eye(3)
    skew[0, 1] = 0.2
    with pytest.raises(StructuralError):
        KfpMode(skew)
    with pytest.raises(EllipticityError):
        KfpMode(np.diag([0.1, 1.0, 1.0]), delta=0.5)
    with pytest.raises(ConfigurationError):
        KfpMode(np.eye(3), delta1=0.5)
    with pytest.raises(ConfigurationError):
        KfpMode(np.eye(3), b=np.array([3.0, 0.0, 0.0]), b_bound=1.0)


def test_solver_config_validation(small_grid):
    with pytest.raises(ConfigurationError):
        make_cfg(small_grid, eps_bc=1.5)
    with pytest.raises(ConfigurationError):
        make_cfg(small_grid, dt=0.0)
    with pytest.raises(ConfigurationError):
        make_cfg(small_grid, lam=-1.0)
    with pytest.raises(ConfigurationError):
        make_cfg(small_grid, closure="reflecting")
    with pytest.raises(ConfigurationError):
        LandauMode(nu=0.0)
    with pytest.raises(StructuralError):
        make_cfg(small_grid, mode=KfpMode(np.broadcast_to(np.eye(3), (3, 3, 3, 3, 3))))


def test_evaluate_broadcasts_sources(small_grid):
    cfg = make_cfg(small_grid)
    assert cfg.evaluate(2.0, 0.0).shape == cfg.state_shape
    values = cfg.evaluate(lambda t, x, v: t + x + 0 * v[..., 0], 1.0)
    assert np.allclose(values[:, 0, 0, 0], 1.0 + cfg.domain.centers())
    with pytest.raises(StructuralError):
        cfg.evaluate(np.ones(3), 0.0)


def test_phase_field_rejects_bad_values(small_grid):
    domain = SlabDomain(1.0, 4)
    with pytest.raises(StructuralError):
        PhaseField(domain, small_grid, np.zeros((3, 5, 5, 5)))
    bad = np.zeros((4, 5, 5, 5))
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(StructuralError):
        PhaseField(domain, small_grid, bad)


# ---------------------------------------------------------------------------
# transport


def test_trace_foot():
    assert trace_foot(0.5, 0.25, 1.0, 1.0) == (0.25, False, 0)
    pos, flipped, bounces = trace_foot(0.5, 1.0, 1.0, 1.0)
    assert pos == pytest.approx(0.5)
    assert flipped
    assert bounces == 1
    pos, flipped, bounces = trace_foot(0.1, -2.0, 1.0, 1.0)
    assert pos == pytest.approx(0.1)
    assert not flipped
    assert bounces == 2


def test_unfold():
    cell, flipped, bounces = unfold(np.array([-1, 0, 3, 4, 8, -5]), 4)
    assert cell.tolist() == [0, 0, 3, 3, 0, 3]
    assert flipped.tolist() == [True, False, False, True, False, False]
    assert bounces.tolist() == [1, 0, 0, 1, 2, 2]


def test_too_many_bounces_is_rejected(small_grid):
    with pytest.raises(StepSizeError):
        TransportPlan(2, 0.5, small_grid.axis(), 5.0, 0.0)


def test_transport_preserves_constants_and_mass(small_grid):
    cfg = make_cfg(small_grid)
    const = PhaseField(cfg.domain, small_grid, np.full(cfg.state_shape, 3.0))
    assert np.allclose(transport_step(const, 0.37).values, 3.0)
    f = PhaseField.initial(cfg)
    moved = transport_step(f, 0.37)
    assert moved.t == f.t
    assert moved.mass() == pytest.approx(f.mass(), rel=1e-13)


def test_zero_speed_is_not_transported(small_grid):
    cfg = make_cfg(small_grid)
    f = PhaseField.initial(cfg)
    c = small_grid.center_index
    moved = transport_step(f, 0.3)
    assert np.array_equal(moved.values[..., c], f.values[..., c])


def test_wall_traces_follow_the_boundary_law(small_grid, rng):
    cfg = make_cfg(small_grid)
    f = PhaseField(cfg.domain, small_grid, rng.random(cfg.state_shape))
    for eps in (0.0, 0.3):
        trace = wall_traces(f, eps)
        for out, inc in zip(trace.outgoing, trace.incoming):
            assert np.allclose(inc, (1.0 - eps) * out[..., ::-1], rtol=0.0, atol=1e-15)
    absorbing = wall_traces(f, 1.0)
    assert all(np.all(inc == 0.0) for inc in absorbing.incoming)
    plus, minus = wall_fluxes(absorbing, f, theta=0.0)
    assert min(plus) > 0
    assert minus == (0.0, 0.0)


@pytest.mark.parametrize("dt", [0.05, 0.1, 0.3])
def test_incoming_residual_is_zero_for_the_transport_plan(small_grid, rng, dt):
    domain = SlabDomain(1.0, 8)
    f = PhaseField(domain, small_grid, rng.random((8, 5, 5, 5)))
    moved = transport_step(f, dt, eps_bc=0.3)
    assert incoming_residual(f, moved, dt, 0.3) <= 1e-14


def test_incoming_residual_catches_a_wrong_wall_law(small_grid, rng):
    domain = SlabDomain(1.0, 8)
    f = PhaseField(domain, small_grid, 0.5 + rng.random((8, 5, 5, 5)))
    # specular transport where the walls should absorb 30%
    no_absorption = transport_step(f, 0.1, eps_bc=0.0)
    assert incoming_residual(f, no_absorption, 0.1, 0.3) > 1e-2
    unflipped = transport_step(f, 0.1, eps_bc=0.3)
    unflipped.values[0] = unflipped.values[0][..., ::-1]
    assert incoming_residual(f, unflipped, 0.1, 0.3) > 1e-3


def test_run_reports_the_measured_trace_residual(small_grid, monkeypatch):
    honest = slab.transport_step

    def sealed_walls(f, dt, eps_bc=0.0, plan=None):
        return honest(f, dt, eps_bc=0.0)

    monkeypatch.setattr(slab, "transport_step", sealed_walls)
    result = run(make_cfg(small_grid, eps_bc=0.5, collision=False), t_final=0.2)
    check = next(c for c in result.checks if c.name == "slab.trace_residual")
    assert not check.passed
    assert all(d.trace_residual > 0 for d in result.diagnostics)


def test_specular_walls_keep_fluxes_balanced(small_grid):
    cfg = make_cfg(small_grid)
    f = PhaseField.initial(cfg)
    plus, minus = wall_fluxes(wall_traces(f, 0.0), f, theta=1.0)
    assert plus[0] == pytest.approx(minus[0])
    assert plus[1] == pytest.approx(minus[1])


# ---------------------------------------------------------------------------
# collisions


def test_constant_state_is_a_fixed_point(small_grid):
    cfg = make_cfg(small_grid, initial=1.0, eps_bc=0.0)
    result = run(cfg, t_final=0.3)
    assert np.allclose(result.final.values, 1.0, atol=1e-12)
    assert result.passed


def test_collision_step_advances_time(small_grid):
    cfg = make_cfg(small_grid, initial=2.0)
    f = PhaseField.initial(cfg)
    out = collision_step(f, cfg)
    assert out.t == pytest.approx(cfg.dt)
    assert np.allclose(out.values, 2.0, atol=1e-12)


def test_relaxation_to_steady_state(small_grid):
    cfg = make_cfg(small_grid, initial=0.0, source=1.0, lam=2.0, dt=0.5)
    result = run(cfg, t_final=10.0)
    assert np.allclose(result.final.values, 0.5, atol=1e-5)
    assert result.energy_passed


def test_explicit_scheme_respects_cfl(small_grid):
    cfg = make_cfg(small_grid, scheme="explicit", dt=0.5)
    with pytest.raises(StepSizeError):
        CollisionOperator(cfg)
    ok = replace(cfg, dt=0.1)
    assert CollisionOperator(ok).cfl_limit() == pytest.approx(1.0 / 6.0)


def test_explicit_scheme_keeps_the_maximum_principle(small_grid):
    cfg = make_cfg(small_grid, scheme="explicit", dt=0.1)
    result = run(cfg, t_final=0.5)
    check = next(c for c in result.checks if c.name == "slab.max_principle")
    assert check.passed
    assert check.details["tight"]


def test_negative_weights_disable_the_monotone_audit(small_grid):
    a = np.array([[0.6, 0.9, 0.0], [0.9, 3.0, 0.0], [0.0, 0.0, 1.0]])
    cfg = make_cfg(small_grid, mode=KfpMode(a, delta=0.2))
    operator = CollisionOperator(cfg)
    assert operator.floor < 0
    assert not operator.monotone


# ---------------------------------------------------------------------------
# full runs


def test_decay_with_absorbing_walls(small_grid):
    cfg = make_cfg(small_grid, eps_bc=0.5)
    result = run(cfg, t_final=0.5)
    energies = [PhaseField.initial(cfg).energy()] + [d.E_theta for d in result.diagnostics]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))
    assert result.passed
    assert {c.name for c in result.checks} == {
        "slab.trace_residual",
        "slab.energy_inequality",
        "slab.max_principle",
    }
    assert result.final.values.min() >= -1e-10


def test_advance_single_step(small_grid):
    cfg = make_cfg(small_grid)
    state = PhaseField.initial(cfg)
    new, diag = advance(state, cfg)
    assert new.t == pytest.approx(0.1)
    assert diag.t == pytest.approx(0.1)
    assert diag.energy_passed


def test_mass_balance_is_exact_below_unit_courant(small_grid):
    cfg = make_cfg(small_grid, domain=SlabDomain(1.0, 8), dt=0.05, eps_bc=0.5, collision=False, initial=wall_profile)
    result = run(cfg, t_final=0.2)
    assert result.summary()["accumulated_mass_residual"] < 1e-13


def ramp_profile(t, x, v):
    return np.exp(-np.sum(v**2, axis=-1)) * (1.0 + 4.0 * np.maximum(x - 0.5, 0.0))


def test_mass_residual_halves_under_refinement(small_grid):
    # Courant numbers 0.8 and 1.6 on both grids; only the 1.6 rows leave a residual
    coarse = make_cfg(small_grid, domain=SlabDomain(1.0, 8), dt=0.1, eps_bc=0.5, collision=False, initial=ramp_profile)
    fine = replace(coarse, domain=SlabDomain(1.0, 16), dt=0.05)
    r_coarse = abs(run(coarse, t_final=coarse.dt).diagnostics[0].mass_residual)
    r_fine = abs(run(fine, t_final=fine.dt).diagnostics[0].mass_residual)
    assert r_coarse > 1e-6
    # per step ~ dt dx, so the residual per unit time halves
    assert (r_coarse / coarse.dt) / (r_fine / fine.dt) == pytest.approx(2.0, rel=1e-6)


def test_accumulated_mass_residual_shrinks_under_refinement(small_grid):
    coarse = make_cfg(small_grid, domain=SlabDomain(1.0, 8), dt=0.1, eps_bc=0.5, collision=False, initial=wall_profile)
    fine = replace(coarse, domain=SlabDomain(1.0, 16), dt=0.05)
    e_coarse = run(coarse, t_final=0.4).summary()["accumulated_mass_residual"]
    e_fine = run(fine, t_final=0.4).summary()["accumulated_mass_residual"]
    assert e_coarse > 0
    assert e_fine < e_coarse


def test_transport_only_run_keeps_bounds(small_grid):
    cfg = make_cfg(small_grid, collision=False)
    result = run(cfg, t_final=0.4)
    assert result.passed
    initial = PhaseField.initial(cfg)
    assert result.final.mass() == pytest.approx(initial.mass(), rel=1e-12)


def scaled_transport(factor):
    honest = slab.transport_step

    def transport(f, dt, eps_bc=0.0, plan=None):
        moved = honest(f, dt, eps_bc=eps_bc, plan=plan)
        return moved.with_values(factor * moved.values)

    return transport


@pytest.mark.parametrize("eps_bc", [0.0, 0.5])
@pytest.mark.parametrize("collision", [True, False])
def test_energy_audit_rejects_a_transport_that_adds_energy(small_grid, monkeypatch, eps_bc, collision):
    monkeypatch.setattr(slab, "transport_step", scaled_transport(1.5))
    result = run(make_cfg(small_grid, eps_bc=eps_bc, collision=collision), t_final=0.3)
    check = next(c for c in result.checks if c.name == "slab.energy_inequality")
    assert not check.passed
    assert not result.energy_passed
    assert check.details["failed_steps"] >= 1


def test_transport_slack_is_bounded_by_the_wall_loss(small_grid):
    cfg = make_cfg(small_grid, eps_bc=0.5, collision=False, initial=wall_profile)
    result = run(cfg, t_final=0.4)
    assert result.energy_passed
    for d in result.diagnostics:
        assert 0.0 <= d.transport_slack <= cfg.dt * (d.flux_plus - d.flux_minus)
    check = next(c for c in result.checks if c.name == "slab.energy_inequality")
    assert check.details["max_transport_slack"] == max(d.transport_slack for d in result.diagnostics)

    specular = run(replace(cfg, eps_bc=0.0), t_final=0.4)
    assert max(abs(d.transport_slack) for d in specular.diagnostics) <= 1e-14


def test_final_state_converges_as_wall_absorption_vanishes(small_grid):
    cfg = make_cfg(small_grid)
    reference = run(cfg, t_final=0.5).final.values
    gaps = [
        float(np.max(np.abs(run(replace(cfg, eps_bc=eps), t_final=0.5).final.values - reference)))
        for eps in (0.1, 0.01, 0.001)
    ]
    assert gaps[0] > gaps[1] > gaps[2] > 0.0
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=0.2)


@pytest.mark.slow
def test_acceptance_sized_explicit_run_keeps_the_bounds():
    cfg = SolverConfig(
        domain=SlabDomain(1.0, 16),
        grid=VelocityGrid(4.0, 17),
        mode=KfpMode(np.eye(3)),
        dt=0.02,
        scheme="explicit",
        initial=gaussian,
    )
    assert cfg.dt <= CollisionOperator(cfg).cfl_limit()
    for scenario in (cfg, replace(cfg, lam=1.0, source=0.5, eps_bc=0.2)):
        result = run(scenario, t_final=200 * scenario.dt)
        assert len(result.diagnostics) == 200
        assert max(d.maxprin_residual for d in result.diagnostics) <= 1e-12
        check = next(c for c in result.checks if c.name == "slab.max_principle")
        assert check.passed
        assert check.details["tight"] == (scenario.lam == 0.0)


def test_threads_do_not_change_the_result(small_grid):
    cfg = make_cfg(small_grid, lam=0.5, source=0.1)
    one = run(cfg, t_final=0.2)
    two = run(replace(cfg, threads=2), t_final=0.2)
    assert np.array_equal(one.final.values, two.final.values)


def test_t_final_must_be_positive(small_grid):
    with pytest.raises(ConfigurationError):
        run(make_cfg(small_grid), t_final=0.0)


def test_checkpoints_and_diagnostics_round_trip(small_grid, tmp_path):
    cfg = make_cfg(small_grid, checkpoint_every=2)
    result = run(cfg, t_final=0.4, checkpoint_dir=tmp_path)
    fields = [p for p in result.checkpoints if p.suffix == ".field"]
    assert [p.name for p in fields] == ["checkpoint_00002.field", "checkpoint_00004.field"]
    restored = load_checkpoint(fields[-1])
    assert restored.t == pytest.approx(result.final.t)
    assert np.array_equal(restored.values, result.final.values)

    path = write_diagnostics_csv(result.diagnostics, tmp_path / "diagnostics.csv")
    table = read_diagnostics_csv(path)
    assert tuple(table) == config.DIAGNOSTIC_COLUMNS
    assert np.array_equal(table["E_theta"], [d.E_theta for d in result.diagnostics])
    assert len(table["t"]) == 4


# ---------------------------------------------------------------------------
# lambda search


def drift_cfg(small_grid):
    k1 = np.arange(small_grid.n)
    checker = (-1.0) ** k1
    return make_cfg(
        small_grid,
        domain=SlabDomain(1.0, 2),
        mode=KfpMode(np.eye(3), b=np.array([5.0, 0.0, 0.0])),
        initial=np.broadcast_to(checker[:, None, None], small_grid.shape),
    )


def test_lambda_search_finds_a_passing_lambda(small_grid):
    cfg = drift_cfg(small_grid)
    calibration = calibrate_lambda(cfg, t_final=0.2)
    lams = [lam for lam, _, _ in calibration.attempts]
    assert lams[0] == 0.0
    assert not calibration.attempts[0][2]
    assert calibration.attempts[-1][2]
    assert all(b > a for a, b in zip(lams, lams[1:]))
    assert calibration.lam == lams[-1]
    assert calibration.result.energy_passed
    assert calibration.to_dict()["lambda"] == calibration.lam


def test_lambda_search_gives_up(small_grid):
    with pytest.raises(SolverError):
        calibrate_lambda(drift_cfg(small_grid), t_final=0.2, max_attempts=1)
    with pytest.raises(ConfigurationError):
        calibrate_lambda(drift_cfg(small_grid), t_final=0.2, factor=1.0)


# ---------------------------------------------------------------------------
# Landau mode


@pytest.fixture(scope="module")
def landau_setup():
    grid = VelocityGrid(2.0, 5)
    cfg = SolverConfig(
        domain=SlabDomain(1.0, 2),
        grid=grid,
        mode=LandauMode(nu=0.5),
        dt=0.05,
        initial=gaussian,
    )
    return cfg, build_coefficients(grid)


def test_landau_run_reports_energy_constant(landau_setup):
    cfg, coefficients = landau_setup
    result = run(cfg, t_final=0.1, coefficients=coefficients)
    assert result.landau_constant is not None
    assert math.isfinite(result.landau_constant)
    assert result.landau_constant > 0
    assert all(d.landau_constant is not None for d in result.diagnostics)
    assert "slab.landau_energy" in {c.name for c in result.checks}


def test_viscosity_sweep(landau_setup):
    cfg, coefficients = landau_setup
    report = vanishing_viscosity_sweep(cfg, [0.5, 0.25, 0.125], t_final=0.1, coefficients=coefficients)
    assert len(report.gaps) == 2
    assert len(report.constants) == 3
    assert all(g >= 0 for g in report.gaps)
    names = {c.name for c in report.checks}
    assert {"sweep.cauchy_decreasing", "sweep.constant_spread"} <= names
    assert "slab.trace_residual[nu=0.125]" in names
    assert report.to_dict()["nus"] == [0.5, 0.25, 0.125]


def test_viscosity_sweep_validation(landau_setup, small_grid):
    cfg, coefficients = landau_setup
    with pytest.raises(ConfigurationError):
        vanishing_viscosity_sweep(cfg, [0.1, 0.2], t_final=0.1, coefficients=coefficients)
    with pytest.raises(ConfigurationError):
        vanishing_viscosity_sweep(cfg, [0.1], t_final=0.1, coefficients=coefficients)
    with pytest.raises(ConfigurationError):
        vanishing_viscosity_sweep(make_cfg(small_grid), [0.2, 0.1], t_final=0.1)
