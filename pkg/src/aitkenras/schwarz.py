"""One-level restricted additive Schwarz and the Richardson driver."""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .dense import SingularMatrixError, lu_factor
from .partition import OverlapPartition, prolong_interface, restrict_interface
from .sparse import DimensionError, SparseMatrix, spmv


class SubdomainSingularError(SingularMatrixError):
    def __init__(self, subdomain: int, detail: str):
        super().__init__(f"local matrix of subdomain {subdomain} is singular ({detail})")
        self.subdomain = subdomain


@dataclass
class Counters:
    """Operation counts; increments are lock-protected so threaded applies stay exact."""

    local_solves: int = 0
    spmv: int = 0
    svd: int = 0
    applies: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, local_solves=0, spmv=0, svd=0, applies=0):
        with self._lock:
            self.local_solves += local_solves
            self.spmv += spmv
            self.svd += svd
            self.applies += applies

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "local_solves": self.local_solves,
                "spmv": self.spmv,
                "svd": self.svd,
                "applies": self.applies,
            }

    def reset(self):
        with self._lock:
            self.local_solves = self.spmv = self.svd = self.applies = 0


def _ncols(x):
    return 1 if x.ndim == 1 else x.shape[1]


class IdentityPreconditioner:
    label = "none"

    def __init__(self, m: int):
        self.m = m
        self.counters = Counters()

    def apply(self, r):
        r = np.asarray(r, dtype=np.float64)
        self.counters.add(applies=_ncols(r))
        return r.copy()


class ExactInverse:
    """M = A^{-1} through one global LU; mostly a reference point."""

    label = "exact"

    def __init__(self, A: SparseMatrix):
        self.m = A.nrows
        self._lu = spla.splu(A.to_scipy().tocsc())
        self.counters = Counters()

    def apply(self, r):
        r = np.asarray(r, dtype=np.float64)
        self.counters.add(local_solves=_ncols(r), applies=_ncols(r))
        return self._lu.solve(r)


class _IterativeLocal:
    """Inexact local solver (GMRES to a relative tolerance), used for cheap build phases."""

    def __init__(self, block: SparseMatrix, tol: float):
        self.block = block.to_scipy()
        self.dimension = block.nrows
        self.tol = tol
        diag = block.diagonal()
        diag[diag == 0] = 1.0
        self.jacobi = spla.LinearOperator(block.shape, matvec=lambda x: x / diag)

    def solve(self, b):
        if b.ndim == 2:
            return np.column_stack([self.solve(col) for col in b.T])
        x, info = spla.gmres(self.block, b, rtol=self.tol, atol=0.0, M=self.jacobi, restart=200)
        return x


class _SparseLocal:
    """SuperLU factorization for local blocks too large to densify cheaply."""

    def __init__(self, block: SparseMatrix):
        self.dimension = block.nrows
        try:
            self._lu = spla.splu(block.to_scipy().tocsc())
        except RuntimeError as exc:  # SuperLU reports exact singularity this way
            raise SingularMatrixError(str(exc)) from None

    def solve(self, b):
        return self._lu.solve(np.ascontiguousarray(b))


DENSE_LOCAL_MAX = 2000


class RasPreconditioner:
    """M^{-1} = sum_i R~_i^T A_i^{-1} R_i  (mode "RAS") or sum_i R_i^T A_i^{-1} R_i (mode "AS")."""

    def __init__(
        self,
        A: SparseMatrix,
        part: OverlapPartition,
        mode: str = "RAS",
        threads: int = 1,
        local_tol: float | None = None,
        local_solver: str = "auto",
    ):
        if local_solver not in ("auto", "dense", "sparse"):
            raise ValueError(f"local_solver must be auto, dense or sparse, got {local_solver!r}")
        if A.nrows != A.ncols or A.nrows != part.m:
            raise DimensionError(f"matrix is {A.shape}, partition covers {part.m} rows")
        mode = mode.upper()
        if mode not in ("RAS", "AS"):
            raise ValueError(f"mode must be RAS or AS, got {mode!r}")
        self.A = A
        self.part = part
        self.mode = mode
        self.threads = max(1, int(threads))
        self.local_tol = local_tol
        self.local_solver = local_solver
        self.counters = Counters()
        self.label = mode
        self.local_factors: list = [
            self._factor(i) for i in range(part.p)
        ]

    @property
    def m(self) -> int:
        return self.part.m

    @property
    def p(self) -> int:
        return self.part.p

    def _factor(self, i):
        block = self.A.submatrix(self.part.extended[i])
        if self.local_tol is not None:
            return _IterativeLocal(block, self.local_tol)
        sparse = self.local_solver == "sparse" or (
            self.local_solver == "auto" and block.nrows > DENSE_LOCAL_MAX
        )
        try:
            return _SparseLocal(block) if sparse else lu_factor(block)
        except SingularMatrixError as exc:
            raise SubdomainSingularError(i, str(exc)) from None

    def _local(self, i, r):
        ext = self.part.extended[i]
        x = self.local_factors[i].solve(r[ext])
        if self.mode == "RAS":
            return self.part.owned[i], x[self.part.owned_local[i]]
        return ext, x

    def apply(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.m:
            raise DimensionError(f"apply: vector has {r.shape[0]} rows, expected {self.m}")
        if self.threads > 1 and self.p > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                pieces = list(pool.map(lambda i: self._local(i, r), range(self.p)))
        else:
            pieces = [self._local(i, r) for i in range(self.p)]
        out = np.zeros_like(r)
        for idx, x in pieces:
            out[idx] += x
        k = _ncols(r)
        self.counters.add(local_solves=self.p * k, applies=k)
        return out

    __call__ = apply


def build_ras(A, part, mode="RAS", threads=1, local_tol=None, local_solver="auto"):
    return RasPreconditioner(
        A, part, mode=mode, threads=threads, local_tol=local_tol, local_solver=local_solver
    )


def apply_ras(M: RasPreconditioner, r) -> np.ndarray:
    return M.apply(r)


# Richardson ------------------------------------------------------------------


DIVERGENCE_FACTOR = 1e8


@dataclass
class RichardsonTrace:
    """Iterates (full or interface-restricted) and residual history of a Richardson run.

    ``status`` is one of "converged", "max_it", "diverged", "nonfinite".
    """

    iterates: list
    residual_norms: list
    status: str
    solution: np.ndarray

    @property
    def iterations(self) -> int:
        return len(self.residual_norms) - 1

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def diverged(self) -> bool:
        return self.status in ("diverged", "nonfinite")


def richardson_run(
    A: SparseMatrix,
    M,
    f,
    u0=None,
    tol: float = 1e-10,
    max_it: int = 1000,
    store: str = "full",
    part: OverlapPartition | None = None,
) -> RichardsonTrace:
    """u^k = u^{k-1} + M^{-1}(f - A u^{k-1}) until ||f - A u^k|| <= tol ||f||.

    ``store`` selects what is kept per iterate: "full", "interface" (needs
    ``part``) or "none".  When f = 0 the test is absolute.
    """
    f = np.asarray(f, dtype=np.float64)
    u = np.zeros_like(f) if u0 is None else np.array(u0, dtype=np.float64)
    if f.shape != (A.nrows,) or u.shape != f.shape:
        raise DimensionError("richardson_run: f and u0 must match A")
    if store == "interface" and part is None:
        raise ValueError("store='interface' needs the partition")
    keep = {
        "full": lambda v: v.copy(),
        "interface": lambda v: restrict_interface(part, v),
        "none": None,
    }[store]
    fnorm = np.linalg.norm(f)
    scale = fnorm if fnorm > 0 else 1.0
    iterates = [keep(u)] if keep else []
    r = f - spmv(A, u)
    counters = getattr(M, "counters", None)
    if counters is not None:
        counters.add(spmv=1)
    res = [float(np.linalg.norm(r))]
    status = "max_it"
    for _ in range(max_it + 1):
        if res[-1] <= tol * scale:
            status = "converged"
            break
        if len(res) > max_it:
            break
        if res[-1] > DIVERGENCE_FACTOR * max(res[0], np.finfo(float).tiny):
            status = "diverged"
            break
        u = u + M.apply(r)
        if not np.all(np.isfinite(u)):
            status = "nonfinite"
            break
        r = f - spmv(A, u)
        if counters is not None:
            counters.add(spmv=1)
        res.append(float(np.linalg.norm(r)))
        if keep:
            iterates.append(keep(u))
    return RichardsonTrace(iterates, res, status, u)


# interface operator ------------------------------------------------------------


def homogeneous_interface_iteration(A: SparseMatrix, M: RasPreconditioner, g) -> np.ndarray:
    """P g = R_Gamma (x - M^{-1} A x) with x = R_Gamma^T g; ``g`` may be an n x k block."""
    g = np.asarray(g, dtype=np.float64)
    x = prolong_interface(M.part, g)
    M.counters.add(spmv=_ncols(g))
    y = x - M.apply(spmv(A, x))
    return restrict_interface(M.part, y)


def assemble_interface_operator(A: SparseMatrix, M: RasPreconditioner) -> np.ndarray:
    """Dense P, column j = P e_j."""
    return homogeneous_interface_iteration(A, M, np.eye(M.part.n))
