import numpy as np
import pytest

from hawkflow.radial_metric import build_grid, perturbed_ale_profile


@pytest.fixture
def default_grid():
    return build_grid(3.0, 200.0, 2048)


@pytest.fixture
def cubic_profile(default_grid):
    return perturbed_ale_profile("cubic", default_grid, M=1.0, a=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
