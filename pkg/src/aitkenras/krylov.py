"""Left-preconditioned full GCR and GMRES."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .sparse import DimensionError, SparseMatrix, spmv

BREAKDOWN_RATIO = 1e-14


@dataclass
class SolveReport:
    method: str
    preconditioner: str
    iterations: int
    precond_residuals: list
    true_residuals: list
    converged: bool
    solution: np.ndarray = field(repr=False)
    wall_time: float = 0.0
    counters: dict = field(default_factory=dict)
    status: str = ""

    @property
    def final_true_residual(self) -> float:
        return self.true_residuals[-1]

    def summary(self) -> dict:
        return {
            "method": self.method,
            "preconditioner": self.preconditioner,
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "final_precond_residual": self.precond_residuals[-1],
            "final_true_residual": self.final_true_residual,
            "wall_time": self.wall_time,
            "counters": self.counters,
        }


class KrylovBreakdown(RuntimeError):
    def __init__(self, message, report: SolveReport):
        super().__init__(message)
        self.report = report


def _label(M):
    return getattr(M, "label", type(M).__name__)


def _setup(A, b, x0):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.nrows,):
        raise DimensionError(f"rhs has shape {b.shape}, matrix is {A.shape}")
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != b.shape:
        raise DimensionError("x0 does not match the rhs")
    bnorm = np.linalg.norm(b)
    return b, x, bnorm if bnorm > 0 else 1.0


def _snapshot(M):
    c = getattr(M, "counters", None)
    return c.snapshot() if c is not None else {}


def report_from_richardson(trace, M, b, wall_time=0.0) -> SolveReport:
    """Wrap a Richardson run in the common report format (precond column = true residual)."""
    bnorm = np.linalg.norm(b) or 1.0
    rel = [r / bnorm for r in trace.residual_norms]
    return SolveReport(
        "richardson", _label(M), trace.iterations, rel, rel, trace.converged,
        trace.solution, wall_time, _snapshot(M), trace.status,
    )


def gcr(A: SparseMatrix, M, b, x0=None, tol: float = 1e-10, max_it: int = 500) -> SolveReport:
    """Full-memory GCR on M^{-1} A x = M^{-1} b; stops on ||M^{-1} r_k|| <= tol ||M^{-1} r_0||."""
    start = time.perf_counter()
    b, x, bnorm = _setup(A, b, x0)
    r = M.apply(b - spmv(A, x))
    r0 = np.linalg.norm(r)
    pres = [1.0 if r0 > 0 else 0.0]
    tres = [np.linalg.norm(b - spmv(A, x)) / bnorm]
    P, Q = [], []

    def report(status):
        return SolveReport(
            "gcr", _label(M), len(pres) - 1, pres, tres, status == "converged", x,
            time.perf_counter() - start, _snapshot(M), status,
        )

    while pres[-1] > tol:
        if len(pres) - 1 >= max_it:
            return report("max_it")
        p = r.copy()
        q = M.apply(spmv(A, p))
        for _ in range(2):
            for pj, qj in zip(P, Q):
                beta = qj @ q
                q -= beta * qj
                p -= beta * pj
        nq = np.linalg.norm(q)
        if nq < BREAKDOWN_RATIO * r0:
            raise KrylovBreakdown(f"GCR breakdown at iteration {len(pres)}", report("breakdown"))
        p /= nq
        q /= nq
        P.append(p)
        Q.append(q)
        alpha = r @ q
        x = x + alpha * p
        r = r - alpha * q
        pres.append(np.linalg.norm(r) / r0)
        tres.append(np.linalg.norm(b - spmv(A, x)) / bnorm)
    return report("converged")


def gmres(
    A: SparseMatrix,
    M,
    b,
    x0=None,
    tol: float = 1e-10,
    max_it: int = 500,
    restart: int | None = None,
) -> SolveReport:
    """Left-preconditioned GMRES (MGS Arnoldi, Givens rotations), optional restart."""
    start = time.perf_counter()
    b, x, bnorm = _setup(A, b, x0)
    r = M.apply(b - spmv(A, x))
    r0 = np.linalg.norm(r)
    pres = [1.0 if r0 > 0 else 0.0]
    tres = [np.linalg.norm(b - spmv(A, x)) / bnorm]
    status = "converged" if r0 == 0 else "max_it"
    m_cycle = restart or max_it
    while pres[-1] > tol and len(pres) - 1 < max_it:
        beta = np.linalg.norm(r)
        V = [r / beta]
        H = np.zeros((m_cycle + 1, m_cycle))
        cs, sn = np.zeros(m_cycle), np.zeros(m_cycle)
        g = np.zeros(m_cycle + 1)
        g[0] = beta
        happy = False
        k = 0
        while k < m_cycle and len(pres) - 1 < max_it:
            w = M.apply(spmv(A, V[k]))
            for j in range(k + 1):
                H[j, k] = V[j] @ w
                w -= H[j, k] * V[j]
            H[k + 1, k] = np.linalg.norm(w)
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            hk1 = H[k + 1, k]
            H[k, k], H[k + 1, k] = denom, 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k += 1
            y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
            xk = x + np.column_stack(V[:k]) @ y
            pres.append(abs(g[k]) / r0)
            tres.append(np.linalg.norm(b - spmv(A, xk)) / bnorm)
            if hk1 <= BREAKDOWN_RATIO * r0:
                happy = True
                break
            if pres[-1] <= tol:
                break
            V.append(w / hk1)
        x = xk
        if happy or pres[-1] <= tol:
            status = "converged"
            break
        r = M.apply(b - spmv(A, x))
    return SolveReport(
        "gmres", _label(M), len(pres) - 1, pres, tres, status == "converged", x,
        time.perf_counter() - start, _snapshot(M), status,
    )
