import os

import pytest
from hypothesis import HealthCheck, settings

from swivel._backend import BACKENDS, HAVE_NUMBA

settings.register_profile("swivel", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("swivel")

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


@pytest.fixture(params=[b for b in BACKENDS if b != "numba" or HAVE_NUMBA])
def backend(request):
    return request.param


@pytest.fixture
def config_path():
    return lambda name: os.path.join(CONFIGS, name)
