import numpy as np
import pytest

from ssrefine.array_model import ArrayGeometry
from ssrefine.music import AngularGrid

TRUE_DOAS = (15.0, 30.0, 45.0)


@pytest.fixture
def geom():
    return ArrayGeometry(8, 0.5)


@pytest.fixture
def grid():
    return AngularGrid(-89.9, 89.9, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitary(rng, m):
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_orthonormal(rng, m, k):
    return random_unitary(rng, m)[:, :k]


ACCEPTANCE_LOG = []


def report(criterion, ok, detail):
    ACCEPTANCE_LOG.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
