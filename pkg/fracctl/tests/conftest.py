import pathlib

import numpy as np
import pytest

from fracctl.calculus import SampledFunction, TimeGrid
from fracctl.kernels import build_kernels
from fracctl.utils import RandomLinearInstance

PROBLEMS = pathlib.Path(__file__).resolve().parents[2] / "problems"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: slow randomized suites")


@pytest.fixture
def problems_dir():
    return PROBLEMS


@pytest.fixture
def unit_grid():
    return TimeGrid(0.0, 1.0, 400)


@pytest.fixture
def scalar_kernel():
    """A = 0, B = 1, alpha = 0.5 on [0, 1]: W = 2/pi, u = sqrt(pi)/2."""
    grid = TimeGrid(0.0, 1.0, 4096)
    g = SampledFunction.constant(grid, 1.0)
    return build_kernels(np.zeros((1, 1)), g, 0.5)


@pytest.fixture
def random_instances():
    return RandomLinearInstance(d_max=4).sample_many(10, random_state=1234)


def linear_kernel(instance, n=400):
    """Kernel of C D^alpha y = -A g(t) y for a LinearInstance."""
    grid = TimeGrid(0.0, instance.T, n)
    return build_kernels(-instance.A, instance.g.sample(grid), instance.alpha)
