import time

import numpy as np
import pytest

from sdri.geometry import Configuration, Grid
from sdri.surface import SurfaceTensions

ACCEPTANCE_LINES = []


@pytest.fixture
def island_cfg():
    """4x4 grid on (-1,1)^2, flat substrate at y = 0, two film cells above it."""
    return Configuration.flat(Grid(1.0, 1.0, 4, 4), film=[(1, 2), (2, 2)])


@pytest.fixture
def tensions():
    return SurfaceTensions.isotropic(1.0, 1.5, 0.5)


@pytest.fixture
def acceptance():
    """Record a one-line verdict for the acceptance summary."""
    def report(number, title, passed, detail, started):
        elapsed = time.perf_counter() - started
        ACCEPTANCE_LINES.append((number, f"AC{number:>2} {'PASS' if passed else 'FAIL'}  {title}  "
                                         f"[{detail}; {elapsed:.1f}s]"))
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
