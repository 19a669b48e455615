import numpy as np
import pytest

from cylwave.grid import make_grid
from cylwave.nonlocal_ops import OperatorWorkspace


@pytest.fixture(scope="session")
def grid_03():
    return make_grid(1.0, 40.0, 1024, 0.3)


@pytest.fixture(scope="session")
def ws_factory():
    cache = {}

    def build(kappa, n=1024, r_max=40.0, R=1.0):
        key = (kappa, n, r_max, R)
        if key not in cache:
            cache[key] = OperatorWorkspace(make_grid(R, r_max, n, kappa), kappa)
        return cache[key]

    return build


def bump_family(r, R=1.0):
    """Five smooth decaying profiles with nonzero traces."""
    x = r - R
    return [
        np.exp(-x),
        (1.0 + x) * np.exp(-0.5 * x * x),
        np.cos(2.0 * x) * np.exp(-0.3 * x * x),
        x**2 * np.exp(-x),
        np.exp(-((x - 3.0) ** 2)) + 0.2 * np.exp(-2.0 * x),
    ]


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s[1:].split()[0])):
            terminalreporter.write_line(line)
