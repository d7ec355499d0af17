import numpy as np
import pytest

from tartarlab.core import DiagMatrix
from tartarlab.fields import Grid, PhaseField


def pytest_terminal_summary(terminalreporter):
    """Print the one-line acceptance verdicts collected during the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


@pytest.fixture
def F0():
    return DiagMatrix(0, 0)


def stripes(n: int, axis: int, phase_a: int = 1, phase_b: int = 3) -> PhaseField:
    """Half/half two-phase stripes varying along the given axis."""
    labels = np.full((n, n), phase_a, dtype=np.uint8)
    if axis == 0:
        labels[n // 2:, :] = phase_b
    else:
        labels[:, n // 2:] = phase_b
    return PhaseField(Grid(n), labels)
