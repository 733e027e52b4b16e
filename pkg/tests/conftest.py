import numpy as np
import pytest

from neuroinherit.data import bundled_glass1a_path, load_proben1, sample_f2

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def glass():
    return load_proben1(bundled_glass1a_path())


@pytest.fixture(scope="session")
def f2_data():
    return sample_f2(200)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
