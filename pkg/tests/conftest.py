import numpy as np
import pytest

from fermigf import Grid, PhysicalConstants

# Lines recorded by test_acceptance.py, echoed in the terminal summary so they
# show up in plain `pytest -v` output (captured stdout is hidden on success).
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def unit():
    return PhysicalConstants()


@pytest.fixture
def grid():
    return Grid()


@pytest.fixture
def wide_grid():
    return Grid(-40.0, 40.0, 2048)


def l2(a, b):
    """Plain grid L² distance between two wave functions on the same grid."""
    return float(np.sqrt(np.sum(np.abs(a.amplitudes - b.amplitudes) ** 2) * a.grid.dq))
