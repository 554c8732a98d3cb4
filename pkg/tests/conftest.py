import numpy as np
import pytest

from topoclust.pointcloud import PointCloud


@pytest.fixture
def line3():
    """Three points on a line at 0, 1 and 3."""
    return PointCloud(np.array([[0.0], [1.0], [3.0]]))


@pytest.fixture
def square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: int, ok: bool, detail: str) -> bool:
        lines.append((criterion, f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
