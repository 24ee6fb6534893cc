"""
Geometry defaults: chart presets, inverse-map iteration and audit tolerances.
"""

# Chart radius r0 used when a preset does not name one
CHART_RADIUS = 1.0

# Damped Newton iteration for y = psi(x)
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 12

# Preset parameters
PRESET_DEFAULTS = {
    "flat": {},
    "paraboloid": {"c1": 0.3, "c2": 0.2},
    "sinusoidal": {"eps": 0.1, "k1": 2.0, "k2": 1.5},
}

# Step used by the gradient-consistency check of a chart
FD_STEP = 1e-4

# One-sided limit offset for continuity probes
PROBE_OFFSET = 1e-6

# Sampled boundary points stay inside this fraction of the chart radius
SAMPLE_RADIUS_FRACTION = 0.5

# Audit tolerances
SPECULAR_TOL = 1e-10
E0_TOL = 1e-12
E1_TOL = 1e-12
E5_TOL = 1e-10
ROUND_TRIP_TOL = 1e-10
CONTINUITY_TOL = 1e-10
BROKEN_CONTROL_MIN_JUMP = 1e-2
E3_FLOOR = 1e-12

# Antisymmetry quadrature
E3_BOX = 5.0
E3_RESOLUTIONS = (32, 48)
E3_TAIL_WARNING = 1e-7
