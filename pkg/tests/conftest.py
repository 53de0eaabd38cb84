import pytest

from triggerlab import calibrate_null


@pytest.fixture(scope="session")
def calib():
    """Shared default-geometry null calibration (window 24, stride 4)."""
    return calibrate_null(window=24, stride=4, n_noises=100, seed=1)
