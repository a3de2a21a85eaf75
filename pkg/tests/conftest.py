import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_problem(rng, n, N, sparsity=None, noise=0.3):
    from sparseva.core import RegressionProblem

    phi = rng.standard_normal((n, N))
    theta = rng.standard_normal(n)
    if sparsity is not None:
        theta[sparsity:] = 0.0
    y = phi.T @ theta + noise * rng.standard_normal(N)
    return RegressionProblem(phi, y), theta


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(criterion: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
