import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qoper.cartan import Twist, cartan_matrix
from qoper.poly import Poly
from qoper.qqsystem import QQInstance

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def a1_instance():
    """Lambda = z - 1, q = 1.7, zeta = 0.6."""
    return QQInstance(cartan_matrix("A", 1), 1.7, (Poly.from_roots([1.0]),), Twist((0.6,)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
