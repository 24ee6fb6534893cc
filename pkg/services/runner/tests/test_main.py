import json

import numpy as np

from kinetex.solver import read_diagnostics_csv
from src.main import main


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    schema = _stdout_json(capsys)
    assert "kind" in schema["properties"]
    assert "version" in schema["required"]


def test_exit_codes_for_bad_configs(tmp_path, write_config):
    assert main(["run", str(tmp_path / "absent.toml")]) == 2
    assert main(["run", str(write_config("version = = 1"))]) == 3
    assert main(["run", str(write_config("version = 1\nkind = 'kfp_run'\n"))]) == 4


def test_bad_override_is_a_schema_violation(decay_config, tmp_path):
    assert main(["run", str(decay_config), "--threads", "0", "--out", str(tmp_path / "out")]) == 4


def test_decay_run_writes_reports(decay_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(decay_config), "--out", str(out)]) == 0
    brief = _stdout_json(capsys)
    assert brief["passed"] is True
    assert {"summary.json", "diagnostics.csv", "final.field"} <= set(brief["files"])

    columns = read_diagnostics_csv(out / "diagnostics.csv")
    assert len(columns["E_theta"]) == 5
    assert np.all(np.diff(columns["E_theta"]) <= 1e-12 * columns["E_theta"][0])

    summary = json.loads((out / "summary.json").read_text())
    assert summary["scenario"]["seed"] == 7
    assert "out" not in summary["scenario"]
    for check in summary["checks"]:
        assert {"tolerance", "provenance", "passed"} <= set(check)


def test_rerun_hashes_match(decay_config, tmp_path, capsys):
    assert main(["run", str(decay_config), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(decay_config), "--out", str(tmp_path / "b")]) == 0
    for name in ("summary.json", "diagnostics.csv", "final.field"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override_is_echoed(decay_config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(decay_config), "--seed", "11", "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["scenario"]["seed"] == 11


def test_checkpoints_enter_the_manifest(write_config, decay_template, tmp_path):
    path = write_config(decay_template.format(solver_extra="checkpoint_every = 2"))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 0
    manifest = {e["path"] for e in json.loads((out / "summary.json").read_text())["manifest"]}
    assert "checkpoints/checkpoint_00002.field" in manifest
    assert "checkpoints/checkpoint_00004.field" in manifest


def test_module_error_exits_with_one(write_config, decay_template, tmp_path):
    text = decay_template.replace("dt = 0.1", "dt = 0.5")
    path = write_config(text.format(solver_extra='scheme = "explicit"'))
    # explicit limit of the identity stencil at h = 1 is 1/6
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 1
    assert not (tmp_path / "out" / "summary.json").exists()


def test_geometry_audit_command(tmp_path, capsys):
    code = main(["audit", "geometry", "--preset", "flat", "--samples", "50", "--no-e3", "--out", str(tmp_path)])
    assert code == 0
    brief = _stdout_json(capsys)
    assert brief["kind"] == "geometry_audit"
    assert all(c["passed"] for c in brief["checks"])
    assert (tmp_path / "summary.json").exists()


def test_stencil_audit_command(capsys):
    assert main(["audit", "stencil", "--samples", "200", "--delta", "0.2"]) == 0
    names = {c["name"] for c in _stdout_json(capsys)["checks"]}
    assert "stencil.reconstruction" in names
