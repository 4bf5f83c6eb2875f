import numpy as np
import pytest

from pogamp.geometry import Domain
from pogamp.kernels import CovKernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit():
    return Domain.square(1.0)


@pytest.fixture
def kern():
    return CovKernel("exponential", sigma2=1.3, phi=0.4, tau2=0.05, mean=0.7)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def _report(criterion, ok, detail):
        line = f"criterion {criterion:>4}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
