"""Finite-difference test problems on rectangular grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import SparseMatrix

RHS_CHOICES = ("linear-y", "sine", "ones", "random:<seed>")


@dataclass(frozen=True, eq=False)
class GridProblem:
    """Interior unknowns of an ``m_x`` by ``m_y`` grid, numbered ``ix * (m_y-2) + iy``."""

    kind: str
    m_x: int
    m_y: int
    extent: tuple
    matrix: SparseMatrix
    rhs: np.ndarray
    exact: np.ndarray | None
    omega: float = 0.0

    @property
    def h_x(self) -> float:
        return self.extent[0] / (self.m_x - 1)

    @property
    def h_y(self) -> float:
        return self.extent[1] / (self.m_y - 1)

    @property
    def interior_shape(self) -> tuple[int, int]:
        return (self.m_x - 2, self.m_y - 2)

    def coordinates(self):
        nx, ny = self.interior_shape
        xs = np.arange(1, nx + 1) * self.h_x
        ys = np.arange(1, ny + 1) * self.h_y
        return np.meshgrid(xs, ys, indexing="ij")


def laplacian_5pt(m_x: int, m_y: int, h_x: float, h_y: float, shift: float = 0.0) -> SparseMatrix:
    """-Delta_h - shift*I with homogeneous Dirichlet rows eliminated."""
    if m_x < 3 or m_y < 3:
        raise ValueError("grids need at least 3 points per direction")
    nx, ny = m_x - 2, m_y - 2
    idx = np.arange(nx * ny).reshape(nx, ny)
    cx, cy = 1.0 / h_x**2, 1.0 / h_y**2
    rows = [idx.ravel()]
    cols = [idx.ravel()]
    vals = [np.full(nx * ny, 2 * cx + 2 * cy - shift)]
    for a, b, c in (
        (idx[1:, :], idx[:-1, :], cx),
        (idx[:-1, :], idx[1:, :], cx),
        (idx[:, 1:], idx[:, :-1], cy),
        (idx[:, :-1], idx[:, 1:], cy),
    ):
        rows.append(a.ravel())
        cols.append(b.ravel())
        vals.append(np.full(a.size, -c))
    return SparseMatrix.from_coo(
        nx * ny, nx * ny, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


def _make_rhs(A: SparseMatrix, X, Y, extent, rhs: str):
    if rhs == "linear-y":
        u = Y.ravel().copy()
    elif rhs == "sine":
        u = (np.sin(np.pi * X / extent[0]) * np.sin(np.pi * Y / extent[1])).ravel()
    elif rhs == "ones":
        return np.ones(A.nrows), None
    elif rhs.startswith("random:"):
        try:
            seed = int(rhs.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad rhs spec '{rhs}', expected random:<integer seed>") from None
        return np.random.default_rng(seed).random(A.nrows), None
    else:
        raise ValueError(f"unknown rhs '{rhs}'; choose from {', '.join(RHS_CHOICES)}")
    return A @ u, u


def poisson2d(m_x: int, m_y: int, rhs: str = "linear-y") -> GridProblem:
    """-Delta u = f on [0,1] x [0,pi].

    With the default ``rhs`` the exact discrete solution is u(x, y) = y.
    """
    extent = (1.0, np.pi)
    hx, hy = extent[0] / (m_x - 1), extent[1] / (m_y - 1)
    A = laplacian_5pt(m_x, m_y, hx, hy)
    prob = GridProblem("poisson", m_x, m_y, extent, A, np.zeros(0), None)
    X, Y = prob.coordinates()
    f, u = _make_rhs(A, X, Y, extent, rhs)
    return GridProblem("poisson", m_x, m_y, extent, A, f, u)


def helmholtz_shift(m: int) -> float:
    """omega at 98% of the smallest eigenvalue of the 2-D discrete Laplacian on the unit square."""
    h = 1.0 / (m - 1)
    return 0.98 * (4.0 / h**2) * (1.0 - np.cos(np.pi * h))


def helmholtz2d(m: int, rhs: str = "sine") -> GridProblem:
    """(-Delta - omega) u = f on the unit square with an m x m grid."""
    if m < 3:
        raise ValueError("m must be at least 3")
    extent = (1.0, 1.0)
    h = 1.0 / (m - 1)
    omega = helmholtz_shift(m)
    A = laplacian_5pt(m, m, h, h, shift=omega)
    prob = GridProblem("helmholtz", m, m, extent, A, np.zeros(0), None, omega)
    X, Y = prob.coordinates()
    f, u = _make_rhs(A, X, Y, extent, rhs)
    return GridProblem("helmholtz", m, m, extent, A, f, u, omega)
