import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aitkenras.dense import (
    EigenvalueConvergenceError,
    RankDeficiencyError,
    SingularMatrixError,
    dense_eigenvalues,
    dense_svd,
    hessenberg,
    lu_factor,
    lu_solve,
    orthonormalize,
)
from aitkenras.sparse import DimensionError

from conftest import laplacian_1d


# LU


def test_lu_scalar():
    assert lu_solve(lu_factor([[4.0]]), [8.0]) == pytest.approx([2.0])


def test_lu_2x2():
    np.testing.assert_allclose(lu_solve(lu_factor([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0]), [1, 1])


def test_lu_laplacian_manufactured():
    A = laplacian_1d(10)
    x = lu_solve(lu_factor(A), A @ np.ones(10))
    np.testing.assert_allclose(x, np.ones(10), atol=1e-10)


def test_lu_backward_error():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((40, 40))
    b = rng.standard_normal(40)
    x = lu_solve(lu_factor(A), b)
    backward = np.linalg.norm(A @ x - b) / (np.linalg.norm(A, 2) * np.linalg.norm(x))
    assert backward <= 1e-12


def test_lu_singular_and_shape_errors():
    with pytest.raises(SingularMatrixError):
        lu_factor([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(DimensionError):
        lu_factor(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        lu_solve(lu_factor(np.eye(2)), np.ones(3))


def test_rcond_flags_bad_conditioning():
    assert lu_factor(np.eye(4)).rcond() == pytest.approx(1.0)
    assert lu_factor(np.diag([1.0, 1e-15])).rcond() < 1e-14


# SVD


def test_svd_diagonal():
    F = dense_svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(F.singular_values, [3, 2, 1])
    np.testing.assert_allclose(np.abs(F.left), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(F.right), np.eye(3), atol=1e-15)


def test_svd_rank_one():
    u = np.array([2.0, 0.0, 0.0, 0.0])
    v = np.array([0.6, 0.8, 0.0])
    F = dense_svd(np.outer(u, v))
    np.testing.assert_allclose(F.singular_values, [2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(F.left.T @ F.left, np.eye(3), atol=1e-12)


def test_svd_against_gram_eigenvalues():
    X = np.random.default_rng(0).standard_normal((6, 4))
    lam = np.sort(dense_eigenvalues(X.T @ X).real)[::-1]
    np.testing.assert_allclose(dense_svd(X).singular_values, np.sqrt(lam), atol=1e-8)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError):
        dense_svd([[1.0, np.nan]])


def test_svd_large_path_uses_same_contract():
    X = np.random.default_rng(5).standard_normal((260, 230))
    F = dense_svd(X)
    assert np.abs(X - F.reconstruct()).max() <= 1e-10 * F.singular_values[0]
    assert np.all(np.diff(F.singular_values) <= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_svd_permutation_invariance(m, n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, n))
    s = dense_svd(X).singular_values
    sp = dense_svd(X[rng.permutation(m)][:, rng.permutation(n)]).singular_values
    np.testing.assert_allclose(sp, s, rtol=1e-10, atol=1e-10 * s[0])


# eigenvalues


def test_eig_diagonal():
    np.testing.assert_allclose(dense_eigenvalues(np.diag([0.2535, 0.8106])), [0.8106, 0.2535])


def test_eig_rotation():
    lam = dense_eigenvalues([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_allclose(sorted(lam, key=lambda z: z.imag), [-1j, 1j], atol=1e-15)


def test_eig_companion():
    # x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
    C = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    np.testing.assert_allclose(dense_eigenvalues(C), [3, 2, 1], atol=1e-12)


def test_hessenberg_is_similar():
    T = np.random.default_rng(2).standard_normal((9, 9))
    H = hessenberg(T)
    assert np.abs(np.tril(H, -2)).max() == 0.0
    assert np.trace(H) == pytest.approx(np.trace(T))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_eig_trace_and_determinant(n, seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
    lam = dense_eigenvalues(T)
    assert abs(lam.sum().real - np.trace(T)) <= 1e-8 * max(1.0, np.abs(T).sum())
    assert abs(lam.sum().imag) <= 1e-8 * max(1.0, np.abs(T).sum())
    F = lu_factor(T)
    det = np.prod(np.abs(np.diag(F.lu)))
    assert np.prod(np.abs(lam)) == pytest.approx(det, rel=1e-6)
    assert np.all(np.diff(np.abs(lam)) <= 1e-12 * np.abs(lam).max())


def test_eig_nonconvergence_reports_partial():
    T = np.random.default_rng(0).standard_normal((12, 12))
    from aitkenras import dense

    with pytest.raises(EigenvalueConvergenceError) as info:
        dense._francis_qr(dense.hessenberg(T), max_iter_per_eig=0)
    assert info.value.remaining > 0


# orthonormalize


def test_orthonormalize_keeps_orthonormal_input():
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 3)))[0]
    np.testing.assert_allclose(np.abs(orthonormalize(Q)), np.abs(Q), atol=1e-14)


def test_orthonormalize_two_columns():
    Q = orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0]]))
    np.testing.assert_allclose(np.abs(Q), np.eye(2), atol=1e-15)


def test_orthonormalize_random_block():
    Q = orthonormalize(np.random.default_rng(0).standard_normal((50, 10)))
    assert np.abs(Q.T @ Q - np.eye(10)).max() <= 1e-12


def test_orthonormalize_names_dependent_column():
    V = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(RankDeficiencyError) as info:
        orthonormalize(V)
    assert info.value.column == 2
