"""Aitken-accelerated restricted additive Schwarz preconditioners."""

from .aitken import (
    CoarseInterfaceSpace,
    aitken_physical,
    aitken_svd_application,
    aitken_svd_inversion,
    build_coarse_operator,
    random_basis,
    random_space,
    svd_basis_from_trace,
    svd_space,
)
from .aras import ArasPreconditioner, apply_aras, build_aras, cost_report
from .krylov import SolveReport, gcr, gmres
from .partition import (
    OverlapPartition,
    band_partition,
    extend_overlap,
    greedy_graph_partition,
)
from .problems import helmholtz2d, poisson2d
from .schwarz import RasPreconditioner, apply_ras, build_ras, richardson_run
from .sparse import SparseMatrix, spmv

__all__ = [
    "ArasPreconditioner",
    "CoarseInterfaceSpace",
    "OverlapPartition",
    "RasPreconditioner",
    "SolveReport",
    "SparseMatrix",
    "aitken_physical",
    "aitken_svd_application",
    "aitken_svd_inversion",
    "apply_aras",
    "apply_ras",
    "band_partition",
    "build_aras",
    "build_coarse_operator",
    "build_ras",
    "cost_report",
    "extend_overlap",
    "gcr",
    "gmres",
    "greedy_graph_partition",
    "helmholtz2d",
    "poisson2d",
    "random_basis",
    "random_space",
    "richardson_run",
    "spmv",
    "svd_basis_from_trace",
    "svd_space",
]
