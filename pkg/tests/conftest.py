import numpy as np
import pytest

from qkahler.report import make_rng

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return make_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def allclose_c(a, b, atol):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= atol
