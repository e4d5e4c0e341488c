import numpy as np
import pytest

from tidehazard import HarmonicConstituent, synthesize_tide
from tidehazard import kernels

M2_SPEED = 28.9841042
K1_SPEED = 15.0410686

BACKENDS = [kernels.NUMPY] + ([kernels.NUMBA] if kernels.NUMBA is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda b: b.name)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def sinusoid():
    """A = 1 m, 12 h period, 42 days."""
    return synthesize_tide([HarmonicConstituent("S", 1.0, 30.0, 0.0)], 42)


@pytest.fixture(scope="session")
def mixed_tide():
    """M2 + K1 over 45 days."""
    return synthesize_tide(
        [HarmonicConstituent("M2", 0.5, M2_SPEED, 0.0), HarmonicConstituent("K1", 0.3, K1_SPEED, 70.0)],
        45,
    )


@pytest.fixture(scope="session")
def year_tide():
    """Two-constituent year with standard deviation close to 0.638 m."""
    return synthesize_tide(
        [HarmonicConstituent("M2", 0.75, M2_SPEED, 0.0), HarmonicConstituent("K1", 0.5, K1_SPEED, 40.0)],
        365,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20111)
