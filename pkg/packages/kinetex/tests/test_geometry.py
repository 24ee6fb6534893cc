import numpy as np
import pytest

from kinetex.errors import ChartRangeError, ChartSingularityError, ConfigurationError, NormalizationError
from kinetex.geometry import (
    R,
    ChartPoint,
    ExpressionChart,
    FlatChart,
    HalfSpaceField,
    RadialCutoff,
    blend_cutoff,
    chart_forward,
    check_e0,
    check_e1,
    check_speed_invariance,
    check_specular_preservation,
    continuity_probe,
    convolution_antisymmetry_check,
    ellipticity_bound,
    extend_whole_space,
    fit_transport_bounds,
    jacobian_matrix,
    make_chart,
    mirror_extend,
    outward_normal,
    psi_inverse,
    run_geometry_audit,
    specular_reflect,
    transform_coefficients,
)
from kinetex.geometry.audit import broken_control_jump, round_trip_error
from kinetex.geometry.charts import sample_boundary_points
from kinetex.geometry.mirror import maxwellian_profile, odd_control_profile

PRESETS = ("flat", "paraboloid", "sinusoidal")


def _interior_points(chart, count, rng):
    y12, w = sample_boundary_points(chart, count, rng)
    depth = -0.3 * chart.radius * rng.random(count)
    return np.concatenate([y12, depth[:, None]], axis=-1), w


def test_make_chart_defaults_and_unknown_preset():
    chart = make_chart("paraboloid")
    assert chart.describe() == {"preset": "paraboloid", "radius": 1.0, "c1": 0.3, "c2": 0.2}
    assert make_chart("sinusoidal", eps=0.05).eps == 0.05
    with pytest.raises(ConfigurationError):
        make_chart("torus")
    with pytest.raises(ConfigurationError):
        make_chart("flat", radius=-1.0)


def test_specular_reflect_flips_normal_component():
    n = np.array([0.0, 0.0, 1.0])
    v = np.array([0.3, -1.0, 2.0])
    assert np.allclose(specular_reflect(v, n), [0.3, -1.0, -2.0])
    tilted = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    twice = specular_reflect(specular_reflect(v, tilted), tilted)
    assert np.allclose(twice, v)
    with pytest.raises(NormalizationError):
        specular_reflect(v, np.array([0.0, 0.0, 2.0]))


def test_flat_chart_is_the_identity(rng):
    chart = FlatChart()
    y, w = _interior_points(chart, 20, rng)
    assert np.allclose(psi_inverse(chart, y), y)
    m, jac = jacobian_matrix(chart, y)
    assert np.allclose(m, np.eye(3))
    assert np.allclose(jac, 1.0)
    point = chart_forward(chart, y, w)
    assert np.allclose(point.y, y)
    assert np.allclose(point.w, w)


def test_paraboloid_boundary_is_mapped_to_plane():
    chart = make_chart("paraboloid")
    y = np.array([0.2, -0.1, 0.0])
    x = psi_inverse(chart, y)
    assert x[2] == pytest.approx(0.3 * 0.04 + 0.2 * 0.01)
    normal = outward_normal(chart, y[:2])
    assert np.linalg.norm(normal) == pytest.approx(1.0)
    assert normal[2] > 0


@pytest.mark.parametrize("preset", PRESETS)
def test_round_trip(preset, rng):
    chart = make_chart(preset)
    assert round_trip_error(chart, 50, rng) < 1e-10


def test_points_outside_chart_are_rejected():
    chart = make_chart("paraboloid")
    with pytest.raises(ChartRangeError):
        psi_inverse(chart, np.array([0.9, 0.9, 0.0]))


def test_steep_chart_is_singular():
    chart = make_chart("paraboloid", c1=1.0, c2=0.2)
    with pytest.raises(ChartSingularityError):
        jacobian_matrix(chart, np.array([0.0, 0.0, 0.75]))


@pytest.mark.parametrize("preset", PRESETS)
def test_boundary_identities(preset, rng):
    chart = make_chart(preset)
    y12, w = sample_boundary_points(chart, 100, rng)
    assert np.max(check_specular_preservation(chart, y12, w)) < 1e-10
    assert np.max(check_e0(chart, y12)) < 1e-12
    assert np.max(check_e1(chart, y12)) < 1e-12
    assert np.max(check_speed_invariance(chart, y12, w)) < 1e-10


def test_transformed_coefficients_stay_elliptic(rng):
    chart = make_chart("sinusoidal")
    y, w = _interior_points(chart, 40, rng)
    delta = 0.5
    a = np.diag([delta, 1.0, 1.0 / delta])
    coeffs = transform_coefficients(chart, a, np.array([0.0, 0.0, 1.0]), ChartPoint(y=y, w=w))
    lam = np.linalg.eigvalsh(coeffs.A)
    bound = ellipticity_bound(chart, y, delta)
    assert np.all(lam[..., 0] >= bound - 1e-12)
    assert np.all(lam[..., -1] <= 1.0 / bound + 1e-12)
    assert coeffs.B.shape == (40, 3)


def test_transport_term_vanishes_on_flat_chart(rng):
    chart = FlatChart()
    y, w = _interior_points(chart, 10, rng)
    coeffs = transform_coefficients(chart, np.eye(3), None, ChartPoint(y=y, w=w))
    assert np.allclose(coeffs.X, 0.0)
    bounds = fit_transport_bounds(chart, ChartPoint(y=y, w=w))
    assert bounds == {"c_x": 0.0, "c_grad": 0.0}


def test_transport_term_is_quadratic_in_w(rng):
    chart = make_chart("paraboloid")
    y, w = _interior_points(chart, 10, rng)
    x1 = transform_coefficients(chart, np.eye(3), None, ChartPoint(y=y, w=w)).X
    x2 = transform_coefficients(chart, np.eye(3), None, ChartPoint(y=y, w=2 * w)).X
    assert np.allclose(x2, 4 * x1)


def test_expression_chart_matches_paraboloid(rng):
    parsed = ExpressionChart("0.3*y1^2 + 0.2*y2^2")
    preset = make_chart("paraboloid")
    y, _ = _interior_points(preset, 15, rng)
    d_parsed = parsed.derivatives(y[:, 0], y[:, 1])
    d_preset = preset.derivatives(y[:, 0], y[:, 1])
    for name in ("rho", "r1", "r2", "r11", "r12", "r22", "r111"):
        assert np.allclose(getattr(d_parsed, name), getattr(d_preset, name))
    assert np.allclose(psi_inverse(parsed, y), psi_inverse(preset, y))


def test_expression_chart_gradient_is_consistent(rng):
    chart = ExpressionChart("0.1*sin(2*y1)*cos(1.5*y2) - 0.05*exp(y1)")
    y12, _ = sample_boundary_points(chart, 20, rng)
    assert chart.gradient_consistency(y12) < 1e-6


@pytest.mark.parametrize("text", ["", "import os", "y3 + 1", "y1 ** __class__"])
def test_expression_chart_rejects_bad_input(text):
    with pytest.raises(ConfigurationError):
        ExpressionChart(text)


def test_radial_cutoff_profile():
    kappa = RadialCutoff(1.0)
    y = np.array([[0.0, 0.0, 0.0], [0.7, 0.0, 0.0], [0.0, 0.9, 0.0], [0.0, 0.0, 0.8]])
    values = kappa(y)
    assert values[0] == 1.0
    assert values[1] == 1.0
    assert values[2] == 0.0
    assert 0.0 < values[3] < 1.0


def test_blend_cutoff():
    a = np.diag([2.0, 3.0, 4.0])
    assert np.allclose(blend_cutoff(a, 0.5, 1.0), a)
    assert np.allclose(blend_cutoff(a, 0.5, 0.0), 0.5 * np.eye(3))
    with pytest.raises(ConfigurationError):
        blend_cutoff(a, 0.5, 1.5)


def test_mirror_extension_reflects_upper_half():
    def fn(y, w):
        return y[..., 2] + 2.0 * w[..., 2] + y[..., 0]

    extended = mirror_extend(HalfSpaceField(fn))
    y = np.array([[0.1, 0.2, -0.3], [0.1, 0.2, 0.3]])
    w = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    out = extended(y, w)
    assert out[0] == pytest.approx(-0.3 + 2.0 + 0.1)
    assert out[1] == pytest.approx(out[0])


def test_mirror_extension_carries_jacobian_weight():
    chart = make_chart("paraboloid")
    field = HalfSpaceField.on_chart(lambda y, w: np.ones(y.shape[:-1]), chart)
    y = np.array([[0.1, 0.1, -0.2]])
    _, jac = jacobian_matrix(chart, y)
    assert np.allclose(field.tilde(y, np.zeros_like(y)), jac)


def test_extend_whole_space_vector_kind():
    def field(y, w):
        return np.broadcast_to(np.array([1.0, 2.0, 3.0]), y.shape)

    y = np.array([[0.0, 0.0, 0.5], [0.0, 0.0, -0.5]])
    out = extend_whole_space(field, "vector_b", y, np.zeros_like(y))
    assert np.allclose(out[0], [1.0, 2.0, -3.0])
    assert np.allclose(out[1], [1.0, 2.0, 3.0])
    with pytest.raises(ConfigurationError):
        extend_whole_space(field, "tensor", y, y)


def test_continuity_probe_sees_smooth_and_broken_fields(rng):
    smooth = continuity_probe(lambda y, w: np.sin(y[..., 0]) + y[..., 2] ** 2, 50, rng)
    assert smooth.max_jump < 1e-9
    step = continuity_probe(lambda y, w: np.where(y[..., 2] > 0, 1.0, 0.0), 50, rng)
    assert step.max_jump == pytest.approx(1.0)
    assert broken_control_jump(50, rng) >= 1e-2


def test_flat_chart_antisymmetry_and_odd_control():
    chart = FlatChart()
    point = np.array([0.1, -0.2])
    w = np.array([0.3, -0.2, 0.5])
    even = convolution_antisymmetry_check(
        chart, maxwellian_profile(chart, point), point, w, half_width=4.0, resolutions=(12, 16)
    )
    assert even.passed
    assert even.residual < 1e-12
    odd = convolution_antisymmetry_check(
        chart, odd_control_profile(chart, point), point, w, half_width=4.0, resolutions=(12, 16)
    )
    assert odd.residual > 1e-4
    record = odd.to_record()
    assert record["check"] == "boundary_convolution_antisymmetry"
    assert record["chart"]["preset"] == "flat"


def test_geometry_audit_passes(rng):
    checks = run_geometry_audit(samples=40, rng=rng, include_e3=False)
    failed = [c.name for c in checks if not c.passed]
    assert failed == []
    names = {c.name for c in checks}
    assert "geometry.paraboloid.flattened_continuity" in names
    assert "geometry.broken_control_jump" in names
