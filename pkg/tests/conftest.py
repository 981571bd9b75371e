import numpy as np
import pytest

from porous_transmission.geometry import make_sphere


@pytest.fixture(scope="session")
def sphere1():
    return make_sphere(1.0, 1)


@pytest.fixture(scope="session")
def sphere2():
    return make_sphere(1.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
