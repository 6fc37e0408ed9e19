import numpy as np
import pytest

from mgarch.garch import ParameterVector, simulate_path
from mgarch.score import ErrorDistribution

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def theta11():
    return ParameterVector(0.1, (0.1,), (0.8,))


@pytest.fixture(scope="session")
def normal():
    return ErrorDistribution("normal", standardized=True)


@pytest.fixture(scope="session")
def series11(theta11, normal):
    return simulate_path(theta11, normal, 3000, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
