import numpy as np
import pytest

from gravvortex.higgs import Divisor, INF, higgs_norm
from gravvortex.surface import make_sphere_grid, make_torus_grid

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus64():
    return make_torus_grid(64, 64, 1j)


@pytest.fixture(scope="session")
def torus32():
    return make_torus_grid(32, 32, 1j)


@pytest.fixture(scope="session")
def sphere32():
    return make_sphere_grid(32, 64)


@pytest.fixture(scope="session")
def single_vortex():
    return Divisor((0.5 + 0.5j,), (1,))


@pytest.fixture(scope="session")
def antipodal_pair():
    return Divisor((0, INF), (1, 1))


@pytest.fixture(scope="session")
def torus_higgs(torus64, single_vortex):
    return higgs_norm(single_vortex, torus64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
