import numpy as np
import pytest
import scipy.sparse.linalg as spla

from aitkenras.problems import helmholtz2d, helmholtz_shift, laplacian_5pt, poisson2d


def test_single_unknown():
    A = laplacian_5pt(3, 3, 0.5, 0.25)
    np.testing.assert_allclose(A.to_dense(), [[2 / 0.25 + 2 / 0.0625]])


def test_dimension_and_symmetry():
    pb = poisson2d(9, 7)
    assert pb.matrix.shape == (7 * 5, 7 * 5)
    assert pb.matrix.is_symmetric()


def test_poisson_is_m_matrix():
    D = poisson2d(8, 11).matrix.to_dense()
    off = D - np.diag(np.diag(D))
    assert np.all(np.diag(D) > 0) and np.all(off <= 0)
    assert np.all(np.diag(D) >= np.abs(off).sum(axis=1) - 1e-12)


def test_generators_are_deterministic():
    a, b = helmholtz2d(20, "random:5"), helmholtz2d(20, "random:5")
    assert a.matrix.values.tobytes() == b.matrix.values.tobytes()
    assert a.rhs.tobytes() == b.rhs.tobytes()


@pytest.mark.parametrize("rhs", ["linear-y", "sine"])
def test_manufactured_solution_recovered(rhs):
    pb = poisson2d(14, 12, rhs)
    u = spla.spsolve(pb.matrix.to_scipy().tocsc(), pb.rhs)
    np.testing.assert_allclose(u, pb.exact, atol=1e-10)


def test_linear_profile_matches_coordinates():
    pb = poisson2d(6, 5)
    _, Y = pb.coordinates()
    np.testing.assert_allclose(pb.exact, Y.ravel())


def test_unknown_rhs_rejected():
    with pytest.raises(ValueError, match="unknown rhs"):
        poisson2d(5, 5, "cubic")


def test_helmholtz_sits_near_resonance():
    m = 30
    h = 1.0 / (m - 1)
    lap_min = (4.0 / h**2) * (1.0 - np.cos(np.pi * h))
    A = helmholtz2d(m).matrix.to_dense()
    lam_min = np.abs(np.linalg.eigvalsh(A)).min()
    assert helmholtz_shift(m) == pytest.approx(0.98 * lap_min)
    assert lam_min == pytest.approx(0.02 * lap_min, rel=1e-9)


def test_helmholtz_infinity_condition_number():
    A = helmholtz2d(164).matrix
    S = A.to_scipy().tocsc()
    lu = spla.splu(S)
    inv = spla.LinearOperator(S.shape, matvec=lu.solve, rmatvec=lambda x: lu.solve(x, trans="T"))
    # ||A^{-1}||_inf = ||A^{-T}||_1 and A is symmetric
    kappa = A.norm_inf() * spla.onenormest(inv)
    assert 1.7918e7 / 2 <= kappa <= 1.7918e7 * 2
