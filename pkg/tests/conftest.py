import numpy as np
import pytest

from dqtrack.controller import Gains
from dqtrack.dynamics import DualInertia
from dqtrack.sim.scenarios import APOLLO_INERTIA, APOLLO_MASS, MARCO_INERTIA, MARCO_MASS


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def marco():
    return DualInertia(MARCO_MASS, MARCO_INERTIA)


@pytest.fixture
def apollo():
    return DualInertia(APOLLO_MASS, APOLLO_INERTIA)


@pytest.fixture
def marco_gains():
    return Gains(0.2, 0.3)
