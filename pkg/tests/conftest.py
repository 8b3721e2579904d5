import pytest

from twodomain.hjb_grid import Grid1D


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-resolution runs (h = 1e-3); deselect with -m 'not slow'")


@pytest.fixture
def coarse_grid():
    return Grid1D(3.0, 1e-2)


@pytest.fixture
def fine_grid():
    return Grid1D(3.0, 1e-3)
