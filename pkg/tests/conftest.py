import numpy as np
import pytest

from sdbeam import CarrierContext, Direction, make_uca


@pytest.fixture
def ctx4():
    return CarrierContext.from_mhz(4.0)


@pytest.fixture
def pentagon():
    return make_uca(5, 3.0)


@pytest.fixture
def look():
    return Direction.from_degrees(90.0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
