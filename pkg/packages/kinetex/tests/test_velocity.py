import numpy as np
import pytest

from kinetex.errors import ConfigurationError, DataError, StructuralError
from kinetex.stencil import SymMatrix3, decompose, default_stencil
from kinetex.velocity import (
    GridField,
    VelocityGrid,
    apply_ah,
    assemble_ah,
    assemble_drift,
    central_gradient,
    first_diff,
    load_field,
    save_field,
    second_diff,
    shift,
    truncation_outflow,
)


def _identity_weights():
    return list(decompose(SymMatrix3(np.eye(3)), delta=0.5).weights), default_stencil()


def test_grid_rejects_even_or_small_counts():
    with pytest.raises(ConfigurationError):
        VelocityGrid(2.0, 8)
    with pytest.raises(ConfigurationError):
        VelocityGrid(2.0, 1)
    with pytest.raises(ConfigurationError):
        VelocityGrid(-1.0, 5)


def test_grid_nodes_and_origin(grid):
    assert grid.spacing == pytest.approx(0.5)
    assert grid.axis()[grid.center_index] == 0.0
    assert grid.node_index(np.array([0.5, -1.0, 2.0])) == (5, 2, 8)
    assert grid.node_index(np.array([0.25, 0.0, 0.0])) is None


def test_field_rejects_non_finite(grid):
    values = np.zeros(grid.shape)
    values[0, 0, 0] = np.nan
    with pytest.raises(DataError):
        GridField(grid, values)


def test_value_outside_box_is_zero(grid):
    u = GridField.constant(grid, 3.0)
    assert u.value_at(np.array([0.0, 0.0, 0.0])) == 3.0
    assert u.value_at(np.array([5.0, 0.0, 0.0])) == 0.0


def test_shift_constant_and_linear(grid):
    u = GridField.constant(grid, 2.5)
    shifted = shift(u, grid.spacing, (1, 0, 0))
    assert np.all(shifted.values[:-1] == 2.5)
    assert np.all(shifted.values[-1] == 0.0)

    lin = GridField.from_function(grid, lambda v1, v2, v3: v1)
    out = shift(lin, grid.spacing, (1, 0, 0))
    assert np.allclose(out.values[:-1], lin.values[:-1] + grid.spacing)


def test_shift_moves_indicator(grid):
    values = np.zeros(grid.shape)
    c = grid.center_index
    values[c, c, c] = 1.0
    out = shift(GridField(grid, values), grid.spacing, (0, 0, 1))
    assert out.values[c, c, c - 1] == 1.0
    assert out.values.sum() == 1.0


def test_shift_rejects_off_lattice_step(grid):
    with pytest.raises(ConfigurationError):
        shift(GridField.zeros(grid), 0.3 * grid.spacing, (1, 0, 0))


def test_first_diff_exact_on_linear(grid):
    lin = GridField.from_function(grid, lambda v1, v2, v3: v1)
    d = first_diff(lin, grid.spacing, (1, 0, 0))
    assert np.allclose(d.values[:-1], 1.0, atol=1e-12)
    assert np.all(first_diff(GridField.constant(grid, 4.0), grid.spacing, (0, 1, 0)).values[:, :-1] == 0.0)


def test_first_diff_product_rule(grid, rng):
    f = GridField(grid, rng.standard_normal(grid.shape))
    g = GridField(grid, rng.standard_normal(grid.shape))
    for l in default_stencil():
        lhs = first_diff(f * g, grid.spacing, l).values
        rhs = g.values * first_diff(f, grid.spacing, l).values + shift(f, grid.spacing, l).values * first_diff(
            g, grid.spacing, l
        ).values
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_second_diff_exact_on_quadratics(grid):
    mask = grid.interior_mask(1)
    r2 = GridField.from_function(grid, lambda v1, v2, v3: v1**2 + v2**2 + v3**2)
    assert np.allclose(second_diff(r2, grid.spacing, (1, 0, 0)).values[mask], 2.0)
    cross = GridField.from_function(grid, lambda v1, v2, v3: v1 * v2)
    assert np.allclose(second_diff(cross, grid.spacing, (1, 1, 0)).values[mask], 2.0)


def test_ah_laplacian_of_speed_squared(grid):
    weights, dirs = _identity_weights()
    u = GridField.from_function(grid, lambda v1, v2, v3: v1**2 + v2**2 + v3**2)
    out = apply_ah(u, weights, dirs)
    assert np.allclose(out.values[grid.interior_mask(1)], 6.0, atol=1e-11)
    assert np.allclose(apply_ah(GridField.constant(grid, 1.0), weights, dirs).values[grid.interior_mask(1)], 0.0)


def test_ah_length_mismatch(grid):
    with pytest.raises(StructuralError):
        apply_ah(GridField.zeros(grid), [1.0], default_stencil())


def test_ah_duality_for_compact_fields(grid, rng):
    weights, dirs = _identity_weights()
    mask = grid.interior_mask(2)
    u = GridField(grid, rng.standard_normal(grid.shape) * mask)
    phi = GridField(grid, rng.standard_normal(grid.shape) * mask)
    lhs = np.sum(apply_ah(u, weights, dirs).values * phi.values)
    rhs = -sum(
        w * np.sum(first_diff(u, grid.spacing, l).values * first_diff(phi, grid.spacing, l).values)
        for w, l in zip(weights, dirs)
    )
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-10)


def test_zero_closure_matches_apply_ah(grid, rng):
    weights, dirs = _identity_weights()
    u = GridField(grid, rng.standard_normal(grid.shape))
    mat = assemble_ah(grid, weights, dirs, "zero")
    assert np.allclose(mat @ u.values.ravel(), apply_ah(u, weights, dirs).values.ravel(), atol=1e-10)


def test_no_flux_closure_is_symmetric_and_kills_constants(grid):
    weights, dirs = _identity_weights()
    mat = assemble_ah(grid, weights, dirs, "no_flux")
    assert abs(mat - mat.T).max() == 0.0
    assert np.allclose(mat @ np.ones(grid.n**3), 0.0, atol=1e-12)


def test_absorbing_closure_loses_truncation_mass(grid):
    weights, dirs = _identity_weights()
    mat = assemble_ah(grid, weights, dirs, "absorbing")
    u = GridField.constant(grid, 1.0)
    loss = -np.sum(mat @ u.values.ravel()) * grid.cell_volume
    assert loss == pytest.approx(truncation_outflow(u, weights, dirs), rel=1e-12)
    assert abs(mat - mat.T).max() < 1e-12


def test_drift_matrix_is_forward_difference(grid, rng):
    b = np.array([0.5, -0.25, 1.0])
    u = GridField(grid, rng.standard_normal(grid.shape))
    expected = sum(b[i] * first_diff(u, grid.spacing, tuple(int(i == k) for k in range(3))).values for i in range(3))
    assert np.allclose(assemble_drift(grid, b) @ u.values.ravel(), expected.ravel(), atol=1e-12)


def test_central_gradient_exact_on_linear(grid):
    u = GridField.from_function(grid, lambda v1, v2, v3: 2.0 * v1 - v3)
    grad = central_gradient(u)
    mask = grid.interior_mask(1)
    assert np.allclose(grad[mask], [2.0, 0.0, -1.0])


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_field_file_round_trip(tmp_path, grid, rng, fmt):
    u = GridField(grid, rng.standard_normal(grid.shape))
    written = save_field(u, tmp_path / "u.field", fmt)
    assert written[1].name == "u.field.json"
    back = load_field(tmp_path / "u.field")
    assert back.grid == grid
    assert np.array_equal(back.values, u.values)
