import numpy as np
import pytest
from hypothesis import settings

from xlbeam.config import SystemConfig, make_frequency_grid

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

@pytest.fixture(scope="session")
def cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def quiet_cfg():
    return SystemConfig(noise_power=0.0)


@pytest.fixture(scope="session")
def grid(cfg):
    return make_frequency_grid(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
