import numpy as np
import pytest

from ncqed.lattice import GridSpec
from ncqed.staralg import ThetaMatrix


@pytest.fixture(scope="session")
def grid2():
    return GridSpec.square(d=2, n=32)


@pytest.fixture(scope="session")
def grid3():
    return GridSpec.square(d=3, n=16)


@pytest.fixture(scope="session")
def theta01():
    return ThetaMatrix.from_pairs(2, {(0, 1): 0.1})


@pytest.fixture(scope="session")
def theta12_3d():
    return ThetaMatrix.from_pairs(3, {(1, 2): 0.1})


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
