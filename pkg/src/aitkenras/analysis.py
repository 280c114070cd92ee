"""Analytic two-subdomain Poisson modes and dense spectral diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .aitken import CoarseInterfaceSpace, build_coarse_operator
from .dense import dense_eigenvalues, dense_svd, orthonormalize
from .schwarz import RasPreconditioner, assemble_interface_operator
from .sparse import DimensionError, SparseMatrix, spmv

DENSE_CAP = 5000


@dataclass(frozen=True)
class TwoDomainPoissonSpec:
    """Two strips of [0,1] x [0,pi] split across x, Dirichlet on the outer boundary.

    Subdomain 1 spans grid lines 0..N1 (its artificial boundary is line N1),
    subdomain 2 spans N2 steps starting at its artificial boundary.  ``gap``
    is the number of x steps between the two artificial boundaries, so gap = 0
    means the subdomains exchange data on a single line (no overlap).
    """

    N1: int
    N2: int
    gap: int
    h_x: float
    m_y: int

    @classmethod
    def from_grid(cls, m_x: int, m_y: int, overlap: int) -> "TwoDomainPoissonSpec":
        """Geometry of a band split of the interior lines with algebraic overlap ``overlap``.

        The first ceil((m_x-2)/2) interior lines are owned by subdomain 1.
        """
        n_x = m_x - 2
        K = math.ceil(n_x / 2)
        b1 = min(K + overlap + 1, m_x - 1)
        b2 = max(K - overlap, 0)
        return cls(N1=b1, N2=(m_x - 1) - b2, gap=b1 - b2, h_x=1.0 / (m_x - 1), m_y=m_y)

    @property
    def h_y(self) -> float:
        return math.pi / (self.m_y - 1)

    @property
    def n_modes(self) -> int:
        return self.m_y - 2

    def eigenvalues(self) -> np.ndarray:
        """lambda_l of the Dirichlet second-difference operator on (0, pi), l = 1..m_y-2."""
        l = np.arange(1, self.n_modes + 1)
        return (2.0 / self.h_y**2) * (1.0 - np.cos(l * self.h_y))


def characteristic_roots(lam, h_x):
    """Roots r1 >= 1 >= r2 of r^2 - (2 + lam h^2) r + 1 = 0."""
    lam = np.asarray(lam, dtype=np.float64)
    t = lam * h_x**2
    s = np.sqrt(t * t + 4.0 * t)
    return (2.0 + t + s) / 2.0, (2.0 + t - s) / 2.0


def _harmonic_value(log_r2, N, j):
    """Discrete harmonic profile with value 1 at step 0 and 0 at step N, read at step j.

    Written with r2 = 1/r1 < 1 so no power overflows.
    """
    if j == 0:
        return np.ones_like(log_r2)
    if j >= N:
        return np.zeros_like(log_r2)
    num = np.exp(j * log_r2) * -np.expm1(2 * (N - j) * log_r2)
    return num / -np.expm1(2 * N * log_r2)


def analytic_interface_modes(spec: TwoDomainPoissonSpec) -> np.ndarray:
    """delta_l, the interface contraction of mode l over one Schwarz sweep (non-increasing).

    A sweep maps the trace on each artificial boundary to the other one, so
    the two-step factor is the product of the two one-sided transfers and
    delta_l is its square root.
    """
    if spec.gap > min(spec.N1, spec.N2):
        raise ValueError("overlap larger than a subdomain")
    _, r2 = characteristic_roots(spec.eigenvalues(), spec.h_x)
    log_r2 = np.log(r2)
    t1 = _harmonic_value(log_r2, spec.N1, spec.gap)
    t2 = _harmonic_value(log_r2, spec.N2, spec.gap)
    return np.sort(np.sqrt(t1 * t2))[::-1]


def analytic_spectrum(spec: TwoDomainPoissonSpec) -> np.ndarray:
    d = analytic_interface_modes(spec)
    return np.concatenate([d, -d]).astype(complex)


def theoretical_rho(spec: TwoDomainPoissonSpec, q: int) -> tuple[float, float, float]:
    """(rho_RAS, rho_ARAS(q), rho_ARAS2(q)) with q the number of removed +/- mode pairs."""
    d = analytic_interface_modes(spec)
    if not 0 <= q <= d.size:
        raise ValueError(f"q must lie in 0..{d.size}")
    dq = d[q] if q < d.size else 0.0
    return float(d[0]), float(dq), float(dq * dq)


# dense operators ---------------------------------------------------------------


def _check_cap(m, cap):
    if m > cap:
        raise ValueError(
            f"dense assembly of a {m} x {m} operator exceeds the cap {cap}; "
            "use estimate_spectral_radius instead (approximate)"
        )


def preconditioned_operator(A: SparseMatrix, M, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense M^{-1} A."""
    m = A.nrows
    _check_cap(m, cap)
    return M.apply(A.to_dense())


def assemble_iteration_operator(A: SparseMatrix, M, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense T = I - M^{-1} A."""
    return np.eye(A.nrows) - preconditioned_operator(A, M, cap)


def assemble_preconditioner(M, m: int, cap: int = DENSE_CAP) -> np.ndarray:
    _check_cap(m, cap)
    return M.apply(np.eye(m))


def spectral_radius(A: SparseMatrix, M, cap: int = DENSE_CAP) -> float:
    T = assemble_iteration_operator(A, M, cap)
    return float(np.abs(dense_eigenvalues(T)[0]))


def condition_number(A: SparseMatrix, M, cap: int = DENSE_CAP) -> float:
    """kappa_2(M^{-1} A) = sigma_max / sigma_min."""
    s = dense_svd(preconditioned_operator(A, M, cap)).singular_values
    return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def estimate_spectral_radius(
    A: SparseMatrix, M, iterations: int = 200, seed: int = 0, tail: int = 50
) -> float:
    """Asymptotic Richardson contraction: geometric mean of error-norm ratios.

    Runs the homogeneous iteration e <- e - M^{-1} A e from a random start,
    renormalizing each step, and averages the last ``tail`` ratios.
    Approximate by nature.
    """
    e = np.random.default_rng(seed).standard_normal(A.nrows)
    e /= np.linalg.norm(e)
    logs = []
    for _ in range(iterations):
        e = e - M.apply(spmv(A, e))
        nrm = np.linalg.norm(e)
        if nrm == 0.0:
            return 0.0
        logs.append(math.log(nrm))
        e /= nrm
    tail = min(tail, len(logs))
    return float(math.exp(np.mean(logs[-tail:])))


# eigen-truncated coarse spaces ---------------------------------------------------


def eigen_truncated_basis(P: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal basis of the invariant subspace of the k largest |eigenvalues| of P.

    Ties in modulus keep the order returned by the eigensolver; a complex
    pair contributes its real and imaginary parts.
    """
    n = P.shape[0]
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in 0..{n}")
    if k == 0:
        return np.zeros((n, 0))
    if np.allclose(P, P.T, rtol=0, atol=1e-13 * max(1.0, np.abs(P).max())):
        lam, vec = np.linalg.eigh(0.5 * (P + P.T))
        vec = vec.astype(complex)
    else:
        lam, vec = sla.eig(P)
    order = np.argsort(-np.abs(lam), kind="stable")
    cols = []
    used = 0
    for idx in order:
        if used >= k:
            break
        v = vec[:, idx]
        if abs(lam[idx].imag) > 1e-12 * max(1.0, abs(lam[idx])):
            if lam[idx].imag < 0:
                continue
            cols.extend([v.real, v.imag])
            used += 2
        else:
            cols.append(v.real if np.abs(v.real).max() >= np.abs(v.imag).max() else v.imag)
            used += 1
    return orthonormalize(np.column_stack(cols)[:, :k])


def eigen_truncated_space(A: SparseMatrix, M: RasPreconditioner, k: int, P=None):
    """Coarse space spanned by the k dominant eigenvectors of the interface operator."""
    if P is None:
        P = assemble_interface_operator(A, M)
    U = eigen_truncated_basis(P, k)
    return CoarseInterfaceSpace(U, build_coarse_operator(A, M, U), "analytic")


def full_space(A: SparseMatrix, M: RasPreconditioner):
    """The whole interface (q = n): P_hat is P itself."""
    U = np.eye(M.part.n)
    return CoarseInterfaceSpace(U, build_coarse_operator(A, M, U), "full-physical")


def interface_mode_table(A: SparseMatrix, M: RasPreconditioner, spec: TwoDomainPoissonSpec):
    """Rows (l, analytic delta_l, numeric |lambda| of P) for l = 1..n_modes."""
    if A.nrows != M.m:
        raise DimensionError("matrix and preconditioner disagree")
    analytic = analytic_interface_modes(spec)
    lam = np.abs(dense_eigenvalues(assemble_interface_operator(A, M)))
    # the numeric spectrum holds each modulus twice (+/- pairs)
    numeric = lam[::2][: analytic.size]
    return [(l + 1, float(a), float(b)) for l, (a, b) in enumerate(zip(analytic, numeric))]
