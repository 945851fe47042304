import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from templefront import GridLevel, diag2
from templefront.decay import default_constants

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec():
    return diag2()


@pytest.fixture(scope="session")
def float_spec():
    return diag2(exact=False)


@pytest.fixture(scope="session")
def constants(spec):
    # default calibration: seed 42, 100 trials; cached per process
    return default_constants(spec)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(params=[2, 3])
def grid(request):
    return GridLevel(request.param)
