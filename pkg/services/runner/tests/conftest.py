from pathlib import Path

import pytest

DECAY_TOML = """
version = 1
kind = "kfp_run"
name = "decay"
seed = 7

[grid]
half_width = 2.0
n = 5

[slab]
length = 1.0
n_x = 4

[solver]
dt = 0.1
t_final = 0.5
eps_bc = 0.5
{solver_extra}

[solver.initial]
kind = "maxwellian_bump"
amplitude = 1.0
bump = 0.5

[kfp]
a = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text: str, name: str = "scenario.toml") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return write


@pytest.fixture
def decay_config(write_config):
    return write_config(DECAY_TOML.format(solver_extra=""))


@pytest.fixture
def decay_template():
    return DECAY_TOML
