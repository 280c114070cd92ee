import numpy as np
import pytest

from aitkenras.aitken import CoarseInterfaceSpace, random_space, svd_space
from aitkenras.analysis import eigen_truncated_space, full_space, spectral_radius
from aitkenras.aras import ArasPreconditioner, build_aras, cost_report
from aitkenras.dense import SingularMatrixError
from aitkenras.partition import band_partition, extend_overlap
from aitkenras.problems import poisson2d
from aitkenras.schwarz import build_ras, richardson_run
from aitkenras.sparse import DimensionError

from conftest import two_band


def test_empty_space_is_plain_ras(poisson16):
    _, A, part, M = poisson16
    empty = CoarseInterfaceSpace(np.zeros((part.n, 0)), np.zeros((0, 0)))
    r = np.random.default_rng(0).standard_normal(A.nrows)
    np.testing.assert_array_equal(build_aras(A, M, empty).apply(r), M.apply(r))


def test_zero_residual_maps_to_zero(poisson16):
    _, A, part, M = poisson16
    aras = build_aras(A, M, random_space(A, M, 4), "ARAS2")
    assert not aras.apply(np.zeros(A.nrows)).any()


def test_matches_dense_formula(poisson16):
    _, A, part, M = poisson16
    space = random_space(A, M, 6, seed=2)
    U, P_hat = space.basis, space.coarse_operator
    m, n = A.nrows, part.n
    R = np.zeros((n, m))
    R[np.arange(n), part.interface] = 1.0
    Minv = M.apply(np.eye(m))
    corr = U @ (np.linalg.inv(np.eye(6) - P_hat) - np.eye(6)) @ U.T
    expected = Minv + R.T @ corr @ R @ Minv
    np.testing.assert_allclose(build_aras(A, M, space).apply(np.eye(m)), expected, atol=1e-11)


def test_exact_space_is_nilpotent_and_direct(poisson16):
    pb, A, _, M = poisson16
    space = full_space(A, M)
    I = np.eye(A.nrows)
    aras = build_aras(A, M, space)
    T = I - aras.apply(A.to_dense())
    assert np.abs(T @ T).max() <= 1e-8
    assert np.abs(np.linalg.eigvals(T)).max() <= 1e-7
    aras2 = build_aras(A, M, space, "ARAS2")
    Ainv = np.linalg.inv(A.to_dense())
    assert np.abs(aras2.apply(I) - Ainv).max() <= 1e-8 * np.abs(Ainv).max()
    assert richardson_run(A, aras, pb.rhs).iterations == 2
    assert richardson_run(A, aras2, pb.rhs).iterations == 1


def test_squared_iteration_operator(poisson16):
    pb, A, _, M = poisson16
    space = svd_space(A, M, pb.rhs, 4)
    D, I = A.to_dense(), np.eye(A.nrows)
    T1 = I - build_aras(A, M, space).apply(D)
    T2 = I - build_aras(A, M, space, "ARAS2").apply(D)
    np.testing.assert_allclose(T2, T1 @ T1, atol=1e-9)


@pytest.mark.parametrize("kind", ["svd", "eigen"])
def test_any_coarse_space_lowers_rho(kind):
    _, A, part, M = two_band(32, 32, 1)
    # a symmetric rhs never excites the antisymmetric modes, so draw a generic one
    f = poisson2d(32, 32, "random:0").rhs
    base = spectral_radius(A, M)
    for q in (1, 2, 5, 10, 15):
        if kind == "svd":
            space = svd_space(A, M, f, q)
        else:
            # modes come in +/- pairs of equal modulus
            space = eigen_truncated_space(A, M, 2 * q)
        assert spectral_radius(A, build_aras(A, M, space)) < base


def test_unit_eigenvalue_in_coarse_operator_is_rejected(poisson16):
    _, A, part, M = poisson16
    U = np.eye(part.n)[:, :1]
    with pytest.raises(SingularMatrixError):
        ArasPreconditioner(A, M, CoarseInterfaceSpace(U, np.ones((1, 1))))


def test_basis_size_must_match_interface(poisson16):
    _, A, part, M = poisson16
    bad = CoarseInterfaceSpace(np.eye(part.n + 1)[:, :2], np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        build_aras(A, M, bad)


def test_apply_costs():
    pb = poisson2d(18, 10)
    A = pb.matrix
    part = extend_overlap(A, band_partition(A.nrows, 4), 1)
    ras = build_ras(A, part)
    space = random_space(A, ras, 6)
    ras.counters.reset()
    ras.apply(pb.rhs)
    assert ras.counters.local_solves == 4
    ras.counters.reset()
    aras2 = build_aras(A, ras, space, "ARAS2")
    aras2.apply(pb.rhs)
    assert (ras.counters.local_solves, ras.counters.spmv) == (8, 1)
    report = cost_report(aras2)
    assert report["per_apply"] == {"local_solves": 8, "spmv": 1}


def test_operator_application_build_cost(poisson16):
    pb, A, part, _ = poisson16
    M = build_ras(A, part)
    q = 6
    space = svd_space(A, M, pb.rhs, q)
    predicted = cost_report(M, q=q, l=space.q)["build"]["operator_application"]
    assert M.counters.local_solves == predicted["local_solves"]
    assert M.counters.svd == predicted["svd"] == 1
