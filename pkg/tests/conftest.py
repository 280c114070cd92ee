import numpy as np
import pytest

from aitkenras.partition import band_partition, extend_overlap
from aitkenras.problems import poisson2d
from aitkenras.schwarz import build_ras
from aitkenras.sparse import SparseMatrix

ACCEPTANCE = {}


def laplacian_1d(m):
    d = np.full(m, 2.0)
    o = np.full(m - 1, -1.0)
    dense = np.diag(d) + np.diag(o, 1) + np.diag(o, -1)
    return SparseMatrix.from_dense(dense)


def two_band(m_x, m_y, delta=1):
    pb = poisson2d(m_x, m_y)
    A = pb.matrix
    part = extend_overlap(A, band_partition(A.nrows, 2), delta)
    return pb, A, part, build_ras(A, part)


@pytest.fixture
def lap10():
    return laplacian_1d(10)


@pytest.fixture(scope="session")
def poisson16():
    return two_band(16, 16, 1)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} | {detail}")
