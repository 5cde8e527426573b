import numpy as np
import pytest

from tomolab.randomness import RngStream


@pytest.fixture
def stream():
    return RngStream(12345)


@pytest.fixture
def gen():
    return np.random.default_rng(2024)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
