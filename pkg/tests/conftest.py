import numpy as np
import pytest

from phaseopt import build_code, two_plaquette_subcode


@pytest.fixture(scope="session")
def d3():
    return build_code("d3")


@pytest.fixture(scope="session")
def sub2():
    return two_plaquette_subcode()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
