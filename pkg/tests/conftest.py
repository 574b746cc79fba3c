import numpy as np
import pytest

from basinmap import IterationParams, Polynomial, reference_roots
from basinmap.raster import DomainRect, render_basin

# filled by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def z7():
    return Polynomial.unity(7)


@pytest.fixture(scope="session")
def z7_roots(z7):
    return reference_roots(z7)


@pytest.fixture(scope="session")
def newton_small(z7, z7_roots):
    return render_basin(z7, IterationParams(a1=0.0), domain=DomainRect(nx=121, ny=121), roots=z7_roots)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
