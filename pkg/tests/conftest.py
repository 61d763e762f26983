import numpy as np
import pytest

from protective.linalg import set_tolerance_profile
from protective.model import build_apparatus

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _default_tolerances():
    set_tolerance_profile("default")
    yield
    set_tolerance_profile("default")


@pytest.fixture(scope="session")
def small_apparatus():
    """64-point lattice, cheap enough for dense cross-checks."""
    return build_apparatus(64, 0.25, 1e3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
