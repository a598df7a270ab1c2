import numpy as np
import pytest

from momentfit.priors import GaussianPrior
from momentfit.quadrature import build_grid


@pytest.fixture
def std_grid():
    return build_grid(0.0, 12.0, 40, 16)


@pytest.fixture
def std_normal():
    return GaussianPrior(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
