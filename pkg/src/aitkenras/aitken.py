"""Vector Aitken extrapolation and the coarse interface spaces built from it."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dense import (
    RankDeficiencyError,
    SingularMatrixError,
    dense_svd,
    lu_factor,
    lu_solve,
    orthonormalize,
)
from .partition import OverlapPartition
from .schwarz import Counters, RasPreconditioner, homogeneous_interface_iteration, richardson_run

COND_LIMIT = 1e14
PINV_CUTOFF = 1e-13
DEFAULT_SVD_TOL = 1e-12


class AitkenError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class CoarseInterfaceSpace:
    """Orthonormal interface basis U (n x q) and, once built, P_hat = U^T P U."""

    basis: np.ndarray
    coarse_operator: np.ndarray | None = None
    origin: str = "random"
    svd_tol: float | None = None
    source_sigma: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def q(self) -> int:
        return self.basis.shape[1]

    def with_operator(self, P_hat) -> "CoarseInterfaceSpace":
        return CoarseInterfaceSpace(
            self.basis, np.asarray(P_hat, dtype=np.float64), self.origin, self.svd_tol, self.source_sigma
        )

    def save(self, path):
        """Binary dump: n, q as little-endian int64, then basis and P_hat row-major <f8."""
        if self.coarse_operator is None:
            raise ValueError("coarse operator not built yet")
        with open(Path(path), "wb") as fh:
            fh.write(struct.pack("<qq", self.n, self.q))
            fh.write(np.ascontiguousarray(self.basis, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.coarse_operator, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, origin="loaded") -> "CoarseInterfaceSpace":
        raw = Path(path).read_bytes()
        if len(raw) < 16:
            raise ValueError(f"{path}: truncated header")
        n, q = struct.unpack("<qq", raw[:16])
        expected = 16 + 8 * (n * q + q * q)
        if n < 0 or q < 0 or len(raw) != expected:
            raise ValueError(f"{path}: size {len(raw)} does not match n={n}, q={q}")
        data = np.frombuffer(raw, dtype="<f8", offset=16).astype(np.float64)
        basis = data[: n * q].reshape(n, q)
        P_hat = data[n * q :].reshape(q, q)
        return cls(basis, P_hat, origin)


def _solve_checked(M, rhs, what):
    try:
        F = lu_factor(M)
    except SingularMatrixError:
        raise AitkenError(f"{what} is singular") from None
    if F.dimension and F.rcond() * COND_LIMIT < 1.0:
        raise AitkenError(f"{what} is numerically singular (condition > {COND_LIMIT:.0e})")
    return lu_solve(F, rhs)


def _extrapolate(P, last, prev):
    """xi = (I - P)^{-1} (last - P prev)."""
    k = P.shape[0]
    return _solve_checked(np.eye(k) - P, last - P @ prev, "I - P")


# Algorithm: physical space ---------------------------------------------------


def aitken_physical(iterates) -> np.ndarray:
    """Exact limit of a purely linear sequence u^{k+1} - xi = P (u^k - xi) in R^n.

    Needs n+2 successive iterates (the last n+2 are used).
    """
    U = np.asarray(iterates, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    n = U.shape[1]
    if U.shape[0] < n + 2:
        raise ValueError(f"need {n + 2} iterates of length {n}, got {U.shape[0]}")
    U = U[-(n + 2) :]
    E = np.diff(U, axis=0).T  # columns E^0 .. E^n
    # column scaling leaves P = E1 E0^{-1} unchanged but keeps the
    # condition estimate meaningful for fast-decaying differences
    scale = np.linalg.norm(E[:, :-1], axis=0)
    scale[scale == 0] = 1.0
    E0, E1 = E[:, :-1] / scale, E[:, 1:] / scale
    # P E0 = E1  <=>  E0^T P^T = E1^T
    try:
        P = _solve_checked(E0.T, E1.T, "difference matrix").T
    except AitkenError as exc:
        raise AitkenError(
            f"{exc}; the iterates do not determine P, use the SVD-based variant instead"
        ) from None
    return _extrapolate(P, U[-1], U[-2])


# random basis ------------------------------------------------------------------


def split_counts(q: int, sizes) -> np.ndarray:
    """Proportional split q_i = round(q |Gamma_i| / sum |Gamma_j|), largest remainders fix the sum."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if q == 0 or sizes.sum() == 0:
        return np.zeros(sizes.size, dtype=np.int64)
    exact = q * sizes / sizes.sum()
    counts = np.floor(exact).astype(np.int64)
    order = np.argsort(-(exact - counts), kind="stable")
    counts[order[: q - counts.sum()]] += 1
    return np.minimum(counts, sizes.astype(np.int64))


def random_basis(
    part: OverlapPartition, q: int, seed: int = 0, q_per_subdomain=None, retries: int = 3
) -> np.ndarray:
    """n x q orthonormal basis from uniform [0,1] draws, block i supported on Gamma_i."""
    n = part.n
    sizes = [loc.size for loc in part.interface_local]
    counts = (
        split_counts(q, sizes)
        if q_per_subdomain is None
        else np.asarray(q_per_subdomain, dtype=np.int64)
    )
    if counts.size != part.p:
        raise ValueError(f"need {part.p} per-subdomain counts, got {counts.size}")
    if np.any(counts > np.array(sizes)) or counts.sum() > n:
        raise ValueError(f"per-subdomain counts {counts.tolist()} exceed interface sizes {sizes}")
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(retries + 1):
        V = np.zeros((n, int(counts.sum())))
        col = 0
        for loc, qi in zip(part.interface_local, counts):
            V[loc, col : col + qi] = rng.random((loc.size, qi))
            col += qi
        try:
            return orthonormalize(V)
        except RankDeficiencyError:
            continue
    raise RankDeficiencyError(-1, 0.0)


def build_coarse_operator(A, M: RasPreconditioner, basis) -> np.ndarray:
    """P_hat = U^T P U, one homogeneous Schwarz sweep per basis column."""
    basis = np.asarray(basis, dtype=np.float64)
    if basis.shape[1] == 0:
        return np.zeros((0, 0))
    W = homogeneous_interface_iteration(A, M, basis)
    return basis.T @ W


def random_space(A, M: RasPreconditioner, q: int, seed: int = 0, q_per_subdomain=None):
    U = random_basis(M.part, q, seed, q_per_subdomain)
    return CoarseInterfaceSpace(U, build_coarse_operator(A, M, U), "random")


# SVD-based --------------------------------------------------------------------


def _trace_matrix(trace):
    Y = np.asarray(trace, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("trace must be a sequence of interface vectors")
    if Y.shape[0] < 3:
        raise ValueError("need at least 3 iterates")
    return Y.T  # columns chronological u^1 .. u^{q+2}


def svd_basis_from_trace(trace, tol: float = DEFAULT_SVD_TOL, counters: Counters | None = None):
    """Left singular vectors of Y = [u^{q+2}, ..., u^1] with sigma_i > tol."""
    Y = _trace_matrix(trace)[:, ::-1]
    F = dense_svd(Y)
    if counters is not None:
        counters.add(svd=1)
    l = int(np.sum(F.singular_values > tol))
    return CoarseInterfaceSpace(
        F.left[:, :l].copy(), None, "svd", tol, F.singular_values[:l].copy()
    )


def _pinv(E):
    F = dense_svd(E)
    s = F.singular_values
    if s.size == 0 or s[0] == 0.0:
        raise AitkenError("difference matrix is zero; use aitken_svd_application")
    inv = np.where(s > PINV_CUTOFF * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (F.right * inv) @ F.left.T


def aitken_svd_inversion(trace, tol: float = DEFAULT_SVD_TOL, counters=None) -> np.ndarray:
    """Aitken limit in the SVD space, P_hat fitted from projected differences.

    With q+2 iterates there are q+1 differences, so at most l = q modes can
    be fitted; P_hat maps the last l differences onto their successors.
    """
    Y = _trace_matrix(trace)
    space = svd_basis_from_trace(trace, tol, counters)
    U = space.basis[:, : max(0, Y.shape[1] - 2)]
    l = U.shape[1]
    if l == 0:
        return Y[:, -1].copy()
    Yh = U.T @ Y
    E = np.diff(Yh, axis=1)
    E0, E1 = E[:, -l - 1 : -1], E[:, -l:]
    P_hat = E1 @ _pinv(E0)
    return U @ _extrapolate(P_hat, Yh[:, -1], Yh[:, -2])


def aitken_svd_application(A, M: RasPreconditioner, trace, tol: float = DEFAULT_SVD_TOL):
    """Aitken limit in the SVD space with P_hat = U^T P U from l Schwarz sweeps.

    Returns the accelerated interface vector and the coarse space.
    """
    Y = _trace_matrix(trace)
    space = svd_basis_from_trace(trace, tol, M.counters)
    U = space.basis
    P_hat = build_coarse_operator(A, M, U)
    space = space.with_operator(P_hat)
    if space.q == 0:
        return Y[:, -1].copy(), space
    Yh = U.T @ Y
    return U @ _extrapolate(P_hat, Yh[:, -1], Yh[:, -2]), space


def interface_trace(A, M: RasPreconditioner, f, steps: int, u0=None) -> np.ndarray:
    """Interface traces of ``steps`` Richardson iterates u^1..u^steps (rows)."""
    run = richardson_run(A, M, f, u0, tol=0.0, max_it=steps, store="interface", part=M.part)
    return np.array(run.iterates[1:])


def svd_space(A, M: RasPreconditioner, f, q: int, tol: float = DEFAULT_SVD_TOL, u0=None):
    """Coarse space of the SVD of q+2 Schwarz iterates (built as in the operator-application variant)."""
    trace = interface_trace(A, M, f, q + 2, u0)
    return aitken_svd_application(A, M, trace, tol)[1]
