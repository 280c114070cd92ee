"""Small dense kernels: LU, one-sided Jacobi SVD, QR eigenvalues, Gram-Schmidt.

Dense matrices are plain 2-D ``float64`` numpy arrays (row-major).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .sparse import DimensionError, SparseMatrix

# Above these sizes the LAPACK drivers (same algorithm families) take over.
JACOBI_MAX_COLS = 200
QR_EIG_MAX_DIM = 160


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class RankDeficiencyError(np.linalg.LinAlgError):
    def __init__(self, column: int, ratio: float):
        super().__init__(
            f"column {column} is numerically dependent on the previous ones "
            f"(residual norm ratio {ratio:.3e})"
        )
        self.column = column


class EigenvalueConvergenceError(np.linalg.LinAlgError):
    """QR iteration stalled; ``partial`` holds the eigenvalues found so far."""

    def __init__(self, partial, remaining: int):
        super().__init__(f"QR iteration did not converge; {remaining} eigenvalues missing")
        self.partial = np.asarray(partial, dtype=complex)
        self.remaining = remaining


def as_dense(X) -> np.ndarray:
    if isinstance(X, SparseMatrix):
        return X.to_dense()
    return np.asarray(X, dtype=np.float64)


# LU -------------------------------------------------------------------------


@dataclass(frozen=True)
class LuFactors:
    dimension: int
    lu: np.ndarray
    piv: np.ndarray
    anorm1: float

    def solve(self, b) -> np.ndarray:
        return lu_solve(self, b)

    def rcond(self) -> float:
        """Reciprocal 1-norm condition estimate (LAPACK ``dgecon``)."""
        if self.dimension == 0:
            return 1.0
        rc, info = lapack.dgecon(self.lu, self.anorm1, norm="1")
        return float(rc)


def lu_factor(A_local) -> LuFactors:
    """Partial-pivoting LU of a (densified) square block."""
    a = as_dense(A_local)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"lu_factor needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("lu_factor: non-finite entries")
    n = a.shape[0]
    anorm = float(np.abs(a).sum(axis=0).max()) if n else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    if n and diag.min() == 0.0:
        raise SingularMatrixError(f"exact zero pivot at position {int(diag.argmin())}")
    return LuFactors(n, lu, piv, anorm)


def lu_solve(F: LuFactors, b) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != F.dimension:
        raise DimensionError(f"lu_solve: rhs has {b.shape[0]} rows, factor is {F.dimension}")
    if F.dimension == 0:
        return b.copy()
    return sla.lu_solve((F.lu, F.piv), b, check_finite=False)


# SVD ------------------------------------------------------------------------


@dataclass(frozen=True)
class SvdFactors:
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right.T


@lru_cache(maxsize=64)
def _round_robin(n: int):
    """Tournament schedule: n-1 (or n) rounds of disjoint column pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [(players[i], players[k - 1 - i]) for i in range(k // 2)]
        pairs = np.array([p for p in pairs if -1 not in p], dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            rounds.append((pairs[:, 0].copy(), pairs[:, 1].copy()))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _jacobi_tall(X: np.ndarray, max_sweeps: int = 60):
    """One-sided Jacobi on a tall matrix; returns (W, V) with X V = W, W orthogonal columns."""
    m, n = X.shape
    # rows of Z are the columns of W followed by the matching columns of V,
    # so one rotation updates both
    Z = np.ascontiguousarray(np.hstack([X.T, np.eye(n)]))
    # rotations below sqrt(m) eps only shuffle rounding noise
    eps = np.sqrt(m) * np.finfo(float).eps
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        # squared column norms, refreshed each sweep and updated exactly per rotation
        norms = np.einsum("ij,ij->i", Z[:, :m], Z[:, :m])
        for i, j in rounds:
            zi, zj = Z[i], Z[j]
            gamma = np.einsum("ij,ij->i", zi[:, :m], zj[:, :m])
            alpha, beta = norms[i], norms[j]
            active = np.abs(gamma) > eps * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            if not active.all():
                i, j, zi, zj = i[active], j[active], zi[active], zj[active]
                alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t[zeta == 0] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            Z[i] = c[:, None] * zi - s[:, None] * zj
            Z[j] = s[:, None] * zi + c[:, None] * zj
            norms[i] = np.maximum(alpha - t * gamma, 0.0)
            norms[j] = np.maximum(beta + t * gamma, 0.0)
        if not rotated:
            return Z[:, :m].T.copy(), Z[:, m:].T.copy()
    raise np.linalg.LinAlgError("Jacobi SVD did not converge")


def _complete_basis(Q: np.ndarray, k: int) -> np.ndarray:
    """Replace columns k: of Q by an orthonormal completion of Q[:, :k]."""
    m, n = Q.shape
    basis = list(Q[:, :k].T)
    for e in np.eye(m):
        if len(basis) == n:
            break
        v = e.copy()
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return np.array(basis).T.reshape(m, n)


def dense_svd(X) -> SvdFactors:
    """Economy SVD, singular values non-increasing."""
    X = as_dense(X)
    if X.ndim != 2:
        raise DimensionError("dense_svd expects a 2-D array")
    if not np.all(np.isfinite(X)):
        raise ValueError("dense_svd: non-finite entries")
    m, n = X.shape
    k = min(m, n)
    if k == 0:
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    if k > JACOBI_MAX_COLS:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        return SvdFactors(U, s, Vt.T)
    transposed = m < n
    Y = X.T if transposed else X
    # QR first so the rotations act on a small square factor
    Q, R = np.linalg.qr(Y)
    W, V = _jacobi_tall(R)
    s = np.linalg.norm(W, axis=0)
    order = np.argsort(-s, kind="stable")
    s, W, V = s[order], W[:, order], V[:, order]
    tiny = s <= s[0] * np.finfo(float).eps * max(m, n) if s[0] > 0 else np.ones(k, bool)
    U = np.zeros_like(W)
    U[:, ~tiny] = W[:, ~tiny] / s[~tiny]
    nonzero = int((~tiny).sum())
    if nonzero < k:
        U = _complete_basis(U, nonzero)
    U = Q @ U
    if transposed:
        U, V = V, U
    return SvdFactors(U, s, V)


# eigenvalues -----------------------------------------------------------------


def hessenberg(T: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity)."""
    H = np.array(T, dtype=np.float64)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            continue
        v = x.copy()
        v[0] += np.copysign(normx, x[0])
        v /= np.linalg.norm(v)
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v)
        H[k + 2 :, k] = 0.0
    return H


def _eig2(a, b, c, d):
    tr = 0.5 * (a + d)
    disc = (0.5 * (a - d)) ** 2 + b * c
    if disc >= 0:
        r = np.sqrt(disc)
        return [complex(tr + r), complex(tr - r)]
    r = np.sqrt(-disc)
    return [complex(tr, r), complex(tr, -r)]


def _reflector(x):
    v = np.array(x, dtype=np.float64)
    nx = np.linalg.norm(v)
    if nx == 0.0:
        return None
    v[0] += np.copysign(nx, v[0])
    return v / np.linalg.norm(v)


def _francis_qr(H: np.ndarray, max_iter_per_eig: int = 40):
    n = H.shape[0]
    eps = np.finfo(float).eps
    hnorm = np.abs(H).max() or 1.0
    found: list[complex] = []
    hi = n - 1
    its = 0
    while hi >= 0:
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = hnorm
            if abs(H[l, l - 1]) <= eps * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            found.append(complex(H[hi, hi]))
            hi -= 1
            its = 0
            continue
        if l == hi - 1:
            found.extend(_eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi]))
            hi -= 2
            its = 0
            continue
        its += 1
        if its > max_iter_per_eig:
            raise EigenvalueConvergenceError(found, hi + 1)
        if its % 11 == 10:
            # exceptional shift to break cycles
            w = abs(H[hi, hi - 1]) + abs(H[hi - 1, hi - 2])
            s, t = 1.5 * w, w * w
        else:
            s = H[hi - 1, hi - 1] + H[hi, hi]
            t = H[hi - 1, hi - 1] * H[hi, hi] - H[hi - 1, hi] * H[hi, hi - 1]
        x = H[l, l] * H[l, l] + H[l, l + 1] * H[l + 1, l] - s * H[l, l] + t
        y = H[l + 1, l] * (H[l, l] + H[l + 1, l + 1] - s)
        z = H[l + 1, l] * H[l + 2, l + 1]
        for k in range(l, hi - 1):
            v = _reflector((x, y, z))
            if v is not None:
                r = max(l, k - 1)
                blk = H[k : k + 3, r : hi + 1]
                blk -= 2.0 * np.outer(v, v @ blk)
                rr = min(k + 3, hi)
                blk = H[l : rr + 1, k : k + 3]
                blk -= 2.0 * np.outer(blk @ v, v)
            x = H[k + 1, k]
            y = H[k + 2, k]
            if k < hi - 2:
                z = H[k + 3, k]
        v = _reflector((x, y))
        if v is not None:
            blk = H[hi - 1 : hi + 1, hi - 2 : hi + 1]
            blk -= 2.0 * np.outer(v, v @ blk)
            blk = H[l : hi + 1, hi - 1 : hi + 1]
            blk -= 2.0 * np.outer(blk @ v, v)
    return found


def dense_eigenvalues(T) -> np.ndarray:
    """All eigenvalues (Hessenberg reduction + Francis double-shift QR), by decreasing modulus."""
    T = as_dense(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise DimensionError(f"dense_eigenvalues needs a square matrix, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("dense_eigenvalues: non-finite entries")
    n = T.shape[0]
    if n > QR_EIG_MAX_DIM:
        lam = sla.eigvals(T, check_finite=False)
    else:
        lam = np.array(_francis_qr(hessenberg(T)), dtype=complex)
    order = np.lexsort((-lam.imag, -lam.real, -np.abs(lam)))
    return lam[order]


# orthonormalization ----------------------------------------------------------


def orthonormalize(V, rel_tol: float = 1e-13) -> np.ndarray:
    """Modified Gram-Schmidt with one reorthogonalization pass."""
    Q = np.array(as_dense(V), dtype=np.float64)
    if Q.ndim != 2:
        raise DimensionError("orthonormalize expects a 2-D array")
    for j in range(Q.shape[1]):
        v = Q[:, j]
        original = np.linalg.norm(v)
        for _ in range(2):
            for i in range(j):
                v -= (Q[:, i] @ v) * Q[:, i]
        nv = np.linalg.norm(v)
        if original == 0.0 or nv < rel_tol * original:
            raise RankDeficiencyError(j, nv / original if original else 0.0)
        v /= nv
    return Q
