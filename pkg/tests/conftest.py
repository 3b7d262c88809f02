import numpy as np
import pytest

from loggas import _accel

BACKENDS = ["numpy"] + (["numba"] if _accel.HAS_NUMBA else [])


@pytest.fixture(scope="session", autouse=True)
def _compile_kernels():
    # JIT compilation happens once per session, outside any timed region.
    _accel.warmup()


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _accel.set_backend(request.param)
    if request.param == "numba":
        _accel.warmup()
    yield request.param
    _accel.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
