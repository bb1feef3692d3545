import numpy as np
import pytest

from holodisc.grid import DiscGrid, GridField, field_from_function


@pytest.fixture(scope="session")
def grid32():
    return DiscGrid(32, 32)


@pytest.fixture(scope="session")
def grid48():
    return DiscGrid(48, 48)


@pytest.fixture(scope="session")
def grid64():
    return DiscGrid(64, 64)


@pytest.fixture(scope="session")
def grid96():
    return DiscGrid(96, 96)


@pytest.fixture(scope="session")
def grid128():
    return DiscGrid(128, 128)


def smooth_scalar_field(grid, seed=0):
    """A generic smooth test function mixing holomorphic and rough-free parts."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)

    def fn(z):
        return (c[0] + c[1] * z + c[2] * np.conj(z) + c[3] * z**2
                + c[4] * np.exp(0.5 * z) + c[5] * np.abs(z) ** 2)

    return field_from_function(grid, fn)
