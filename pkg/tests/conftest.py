import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_instance():
    """N=1, R=1, T=3, K=2 with fixed likelihood, state and persistence probabilities."""
    L = np.array([[-0.3, -1.7], [-2.2, -0.4], [-0.9, -1.1]])
    w = np.array([0.35, 0.65])
    a = np.array([0.0, 0.55, 0.7])
    return L, w, a


CRITERIA: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    def record(number, name, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        CRITERIA.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
