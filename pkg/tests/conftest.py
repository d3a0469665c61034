import numpy as np
import pytest

from glucodelay import presets


@pytest.fixture(scope="session")
def canonical():
    return presets.canonical()


@pytest.fixture(scope="session")
def a2():
    return presets.a2_hill()


@pytest.fixture(scope="session")
def msin_fa():
    return presets.msin_fa()


@pytest.fixture(scope="session")
def msin_fb():
    return presets.msin_fb()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(LINES):
            terminalreporter.write_line(LINES[n])
