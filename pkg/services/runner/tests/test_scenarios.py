import json

import numpy as np
import pytest

from kinetex.velocity import load_table
from src.reports import emit_reports
from src.scenarios import OutputRecord, perturbation, profile_source, run_scenario, solver_config
from src.schema import ProfileSpec, validate_config

LANDAU_BASE = {
    "version": 1,
    "grid": {"half_width": 2.0, "n": 5},
    "slab": {"length": 1.0, "n_x": 2},
    "solver": {"dt": 0.05, "t_final": 0.1},
    "landau": {"nu": 0.5},
}


def test_empty_record_writes_summary_only(tmp_path):
    manifest = emit_reports(OutputRecord(), tmp_path)
    assert [p.name for p in tmp_path.iterdir()] == ["summary.json"]
    assert [e.path for e in manifest] == ["summary.json"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["manifest"] == []


def test_profile_sources():
    x = np.array([0.25, 0.75]).reshape(-1, 1, 1, 1)
    v = np.zeros((1, 1, 1, 1, 3))
    assert profile_source(ProfileSpec(kind="constant", amplitude=2.0), 1.0) == 2.0
    flat = profile_source(ProfileSpec(kind="maxwellian", amplitude=1.0), 1.0)(0.0, x, v)
    assert flat.shape == (2, 1, 1, 1)
    assert np.allclose(flat, np.pi**-1.5)
    bumped = profile_source(ProfileSpec(kind="maxwellian_bump", amplitude=1.0, bump=0.5), 1.0)(0.0, x, v)
    # cos(pi/2) = cos(3 pi/2) = 0
    assert np.allclose(bumped, np.pi**-1.5)


def test_perturbation(tmp_path):
    cfg = validate_config({**LANDAU_BASE, "kind": "landau_run"})
    grid = solver_config(cfg).grid
    assert perturbation(grid, 0.0) is None
    g = perturbation(grid, 2.0)
    c = grid.center_index
    assert g.values[c, c, c] == pytest.approx(2.0 * np.pi**-0.75)


def test_landau_build_exports_tables(tmp_path):
    cfg = validate_config(
        {"version": 1, "kind": "landau_build", "landau_build": {"grid": {"half_width": 2.0, "n": 5}, "audit": False}}
    )
    record = run_scenario(cfg)
    assert record.checks == []
    assert record.summary["sigma_bounds"]["c1"] > 0
    emit_reports(record, tmp_path)
    grid, values, _ = load_table(tmp_path / "tables" / "sigma.field")
    assert grid.n == 5
    assert values.shape == grid.shape + (6,)
    manifest = json.loads((tmp_path / "summary.json").read_text())["manifest"]
    assert "tables/sigma.field" in {e["path"] for e in manifest}


def test_landau_run_record(tmp_path):
    cfg = validate_config({**LANDAU_BASE, "kind": "landau_run"})
    record = run_scenario(cfg)
    assert "slab.landau_energy" in {c.name for c in record.checks}
    assert record.summary["landau_constant"] > 0
    assert len(record.diagnostics["diagnostics"]) == 2
    assert record.fields["final"].t == pytest.approx(0.1)


def test_viscosity_sweep_record(tmp_path):
    cfg = validate_config({**LANDAU_BASE, "kind": "viscosity_sweep", "sweep": {"nus": [0.5, 0.25, 0.125]}})
    record = run_scenario(cfg)
    assert set(record.diagnostics) == {"diagnostics_nu=0.5", "diagnostics_nu=0.25", "diagnostics_nu=0.125"}
    assert len(record.summary["gaps"]) == 2
    assert "sweep.cauchy_decreasing" in {c.name for c in record.checks}
    emit_reports(record, tmp_path)
    assert (tmp_path / "diagnostics_nu=0.125.csv").exists()
    assert (tmp_path / "final.field").exists()


def test_calibrated_kfp_run_reports_search():
    cfg = validate_config(
        {
            "version": 1,
            "kind": "kfp_run",
            "grid": {"half_width": 2.0, "n": 5},
            "slab": {"length": 1.0, "n_x": 4},
            "solver": {"dt": 0.1, "t_final": 0.2, "calibrate_lambda": True},
            "kfp": {},
        }
    )
    record = run_scenario(cfg)
    search = record.summary["lambda_search"]
    assert search["attempts"][-1]["passed"] is True
    assert search["lambda"] == record.summary["lambda"]
