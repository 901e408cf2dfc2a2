import numpy as np
import pytest

from ndwave.fields import PacketParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def moving():
    return PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))


@pytest.fixture
def resting():
    return PacketParams(1.0, 1.0, (0.0, 0.0, 0.0))
