import numpy as np
import pytest

from kinetex.velocity import VelocityGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return VelocityGrid(half_width=2.0, n=9)


@pytest.fixture
def small_grid():
    return VelocityGrid(half_width=2.0, n=5)
