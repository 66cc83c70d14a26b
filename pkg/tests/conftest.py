import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcrefine.basis import projection_context
from mcrefine.frame import BlockRef, build_layout

# FFT plans and basis construction make first calls slow; wall-clock
# deadlines would flake.
settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def layout8():
    """Interior block of size 8: all four neighbours available, 24x24 area."""
    return build_layout((96, 96), BlockRef(48, 48, size=8))


@pytest.fixture(scope="session")
def ctx8(layout8):
    return projection_context(layout8)


@pytest.fixture(scope="session")
def ctx8_matrix(layout8):
    return projection_context(layout8, mode="matrix")


@pytest.fixture(scope="session")
def layout16():
    """Interior block at the reference size: 48x48 working area."""
    return build_layout((352, 288), BlockRef(160, 144, size=16))


@pytest.fixture(scope="session")
def ctx16(layout16):
    return projection_context(layout16)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
