import numpy as np
import pytest

from fracscat import make_grid, make_potential


@pytest.fixture(scope="session")
def g8():
    return make_grid(1, 8, np.pi)


@pytest.fixture(scope="session")
def g64():
    return make_grid(1, 64, 16.0)


@pytest.fixture(scope="session")
def gauss64(g64):
    return make_potential(g64, "gaussian", {"a": 0.5, "w": 2.0})


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_vector(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
