import pytest
from hypothesis import HealthCheck, settings

from ellipq.theta import LatticeParams

settings.register_profile("ellipq", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ellipq")

ETA = 0.3 + 0.8j


@pytest.fixture(scope="session")
def lat():
    return LatticeParams(ETA)


@pytest.fixture(scope="session")
def lat_i():
    return LatticeParams(1j)
