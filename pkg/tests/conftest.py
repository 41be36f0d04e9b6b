import random

import pytest
from hypothesis import HealthCheck, settings

from lda2iot.crypto import TOY23
from lda2iot.runtime import Deployment

# P-256 work is a few ms per example, so property tests stay modest by default
settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def toy():
    return TOY23


@pytest.fixture
def dep():
    """Two users (levels 1 and 5) and two sensors (levels 1 and 4)."""
    return Deployment.create([1, 5], [1, 4], seed=7)
