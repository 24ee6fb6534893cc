import math

import numpy as np
import pytest

from kinetex.errors import ConfigurationError, DataError, DegenerateCylinderError, PreconditionError
from kinetex.spaces import (
    KineticCylinder,
    WeightSpec,
    anisotropic_holder_seminorm,
    holder_norm,
    initial_value_norm,
    kinetic_osc,
    sigma_weighted_norm,
    sp_norm_components,
    weighted_norm,
)
from kinetex.velocity import GridField


def test_weight_spec_validation():
    WeightSpec(p=math.inf, theta=3.0)
    with pytest.raises(ConfigurationError):
        WeightSpec(p=0.5)
    with pytest.raises(ConfigurationError):
        WeightSpec(theta=-1.0)
    with pytest.raises(ConfigurationError):
        WeightSpec(theta=math.inf)


def test_weighted_norm_of_constant(grid):
    one = GridField.constant(grid, 1.0)
    side = grid.n * grid.spacing
    assert weighted_norm(one, grid, WeightSpec()) == pytest.approx(side**1.5)
    assert weighted_norm(one, grid, WeightSpec(p=1.0), x_cell=0.5) == pytest.approx(0.5 * side**3)
    # corner of the box: |v|^2 = 12
    assert weighted_norm(one, grid, WeightSpec(p=math.inf, theta=2.0)) == pytest.approx(13.0)


def test_weighted_norm_grows_with_theta(grid):
    f = GridField(grid, np.exp(-grid.speed_squared()))
    values = [weighted_norm(f, grid, WeightSpec(theta=t)) for t in (0.0, 1.0, 4.0)]
    assert values[0] < values[1] < values[2]


def test_weighted_norm_over_phase_space(grid):
    values = np.ones((4, *grid.shape))
    single = weighted_norm(np.ones(grid.shape), grid, WeightSpec(), x_cell=0.25)
    assert weighted_norm(values, grid, WeightSpec(), x_cell=0.25) == pytest.approx(2.0 * single)


def test_sigma_weighted_norm_with_identity(grid):
    sigma = np.broadcast_to(np.eye(3), grid.shape + (3, 3))
    f = GridField.constant(grid, 2.0)
    grad = np.zeros(grid.shape + (3,))
    expected = math.sqrt(4.0 * float(np.sum(grid.speed_squared())) * grid.cell_volume)
    assert sigma_weighted_norm(f, grad, sigma, grid) == pytest.approx(expected)


def test_sigma_weighted_norm_rejects_indefinite_sigma(grid):
    sigma = np.broadcast_to(np.diag([1.0, 1.0, -1.0]), grid.shape + (3, 3))
    with pytest.raises(DataError):
        sigma_weighted_norm(np.ones(grid.shape), np.zeros(grid.shape + (3,)), sigma, grid)


def test_holder_seminorm_of_linear_velocity_profile(rng):
    x_box = np.array([[0.0], [1e-6]])
    v_box = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])
    estimate = anisotropic_holder_seminorm(lambda x, v: v[:, 0], x_box, v_box, 1.0, 2000, rng)
    assert 0.9 < estimate.value <= 1.0
    assert estimate.pairs + estimate.skipped == 2000
    report = estimate.report("linear", seed=1234)
    assert report.to_dict()["p"] == "inf"


def test_holder_seminorm_is_reproducible():
    x_box = np.array([[0.0], [1.0]])
    v_box = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])

    def fn(x, v):
        return np.sin(x[:, 0]) * np.cos(v[:, 1])

    a = anisotropic_holder_seminorm(fn, x_box, v_box, 0.5, 300, np.random.default_rng(7))
    b = anisotropic_holder_seminorm(fn, x_box, v_box, 0.5, 300, np.random.default_rng(7))
    assert a.value == b.value
    with pytest.raises(ConfigurationError):
        anisotropic_holder_seminorm(fn, x_box, v_box, 1.5, 10, np.random.default_rng(7))


def test_holder_norm_includes_sup(rng):
    x_box = np.array([[0.0], [1.0]])
    v_box = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])
    value = holder_norm(lambda x, v: np.full(len(x), 3.0), x_box, v_box, 0.5, 100, rng)
    assert value == pytest.approx(3.0)


def test_cylinder_membership():
    cyl = KineticCylinder(t0=1.0, x0=(0.0,), v0=(0.0, 0.0, 2.0), r=0.5)
    assert cyl.x_components == (2,)
    t = np.array([1.0, 0.9, 0.9, 1.1])
    # the x center drifts back with v3 = 2
    x = np.array([[0.0], [-0.2], [0.0], [0.0]])
    v = np.array([[0.0, 0.0, 2.0]] * 4)
    assert cyl.contains(t, x, v).tolist() == [True, True, False, False]
    with pytest.raises(DegenerateCylinderError):
        KineticCylinder(t0=0.0, x0=(0.0,), v0=(0.0, 0.0, 0.0), r=0.0)


def test_samples_lie_in_cylinder(rng):
    cyl = KineticCylinder(t0=0.0, x0=(0.1, 0.2, 0.3), v0=(1.0, -1.0, 0.5), r=0.3)
    t, x1, v1, x2, v2 = cyl.sample_pairs(200, rng)
    assert np.all(cyl.contains(t, x1, v1))
    assert np.all(cyl.contains(t, x2, v2))


def test_kinetic_osc_is_linear_in_radius_for_linear_coefficient():
    def a(t, x, v):
        return v[:, 0]

    small = KineticCylinder(t0=0.0, x0=(0.0,), v0=(0.0, 0.0, 1.0), r=0.1)
    large = KineticCylinder(t0=0.0, x0=(0.0,), v0=(0.0, 0.0, 1.0), r=0.2)
    osc_small = kinetic_osc(a, small, 500, np.random.default_rng(3))
    osc_large = kinetic_osc(a, large, 500, np.random.default_rng(3))
    assert osc_large == pytest.approx(2.0 * osc_small)
    constant = kinetic_osc(lambda t, x, v: np.ones((len(t), 3, 3)), small, 50, np.random.default_rng(3))
    assert constant == 0.0
    with pytest.raises(DegenerateCylinderError):
        kinetic_osc(a, small, 0, np.random.default_rng(3))


def test_sp_components_of_constant_series(grid):
    n_x, dx, dt = 4, 0.25, 0.1
    f = np.ones((3, n_x, *grid.shape))
    parts = sp_norm_components(f, grid, dt=dt, dx=dx)
    expected = math.sqrt(n_x * dx * dt * (grid.n * grid.spacing) ** 3)
    assert parts.f == pytest.approx(expected)
    assert parts.grad_v == pytest.approx(0.0, abs=1e-12)
    assert parts.hess_v == pytest.approx(0.0, abs=1e-12)
    assert parts.transport == pytest.approx(0.0, abs=1e-12)
    assert parts.total == pytest.approx(expected)


def test_sp_transport_sees_time_derivative(grid):
    dt = 0.1
    times = dt * np.arange(3)
    f = times[:, None, None, None, None] * np.ones((3, 2, *grid.shape))
    parts = sp_norm_components(f, grid, dt=dt, dx=0.5)
    unit = math.sqrt(2 * 0.5 * dt * (grid.n * grid.spacing) ** 3)
    assert parts.transport == pytest.approx(unit)
    with pytest.raises(PreconditionError):
        sp_norm_components(f[:2], grid, dt=dt, dx=0.5)


def test_initial_value_norm_of_constant(grid):
    u = np.ones((3, *grid.shape))
    out = initial_value_norm(u, grid, dx=0.5)
    assert out["trace_sup"] == pytest.approx(1.0)
    assert out["interior"] == pytest.approx(math.sqrt(3 * 0.5 * (grid.n * grid.spacing) ** 3))
    assert out["total"] == pytest.approx(out["interior"] + 1.0)
