import numpy as np
import pytest

from percshift.pointcloud import PointCloud


def cloud(points, **kw):
    return PointCloud(np.asarray(points, dtype=float), **kw)


@pytest.fixture
def three():
    """1-D points 0, 1, 3: distances 1, 2, 3."""
    return cloud([[0.0], [1.0], [3.0]], label="three")


@pytest.fixture
def two_clusters():
    """Two coincident 5-point clusters separated by a gap of 2.5."""
    return cloud([[0.0, 0.0]] * 5 + [[2.5, 0.0]] * 5, label="clusters")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(label, ok, detail)."""

    def record(label, ok, detail=""):
        _CRITERIA.append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_CRITERIA, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
