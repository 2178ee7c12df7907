import numpy as np
import pytest

from pdolab.cutoffs import RadialCutoff
from pdolab.grid import TorusGrid
from pdolab.corpus import random_input


@pytest.fixture(scope="session")
def g1024():
    return TorusGrid(1, 1024)


@pytest.fixture(scope="session")
def g256():
    return TorusGrid(1, 256)


@pytest.fixture(scope="session")
def psi():
    return RadialCutoff()


@pytest.fixture(scope="session")
def u_band300(g1024):
    return random_input(g1024, 300, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
