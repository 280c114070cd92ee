"""Compressed-row sparse matrices and Matrix Market I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """CSR matrix with sorted, duplicate-free column indices in every row."""

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        offs = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        cols = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if offs.shape != (self.nrows + 1,) or offs[0] != 0:
            raise ValueError("row_offsets must have length nrows+1 and start at 0")
        if np.any(np.diff(offs) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if offs[-1] != cols.size or cols.size != vals.size:
            raise ValueError("row_offsets[-1], len(col_indices) and len(values) differ")
        if cols.size:
            if cols.min() < 0 or cols.max() >= self.ncols:
                raise ValueError("column index out of range")
            rows = np.repeat(np.arange(self.nrows), np.diff(offs))
            same_row = rows[1:] == rows[:-1]
            if np.any(cols[1:][same_row] <= cols[:-1][same_row]):
                raise ValueError("column indices must be strictly increasing within a row")
        else:
            rows = np.zeros(0, dtype=np.int64)
        for name, arr in (("row_offsets", offs), ("col_indices", cols), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        rows.setflags(write=False)
        object.__setattr__(self, "_rows", rows)

    # construction -------------------------------------------------------

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals) -> "SparseMatrix":
        """Assemble from triplets; duplicate entries are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise DimensionError("triplet arrays must have equal length")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.ones(rows.size, dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        offs = np.zeros(nrows + 1, dtype=np.int64)
        np.add.at(offs, rows + 1, 1)
        return cls(nrows, ncols, np.cumsum(offs), cols, vals)

    @classmethod
    def from_dense(cls, dense, drop_zeros=True) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionError("expected a 2-D array")
        mask = dense != 0 if drop_zeros else np.ones(dense.shape, dtype=bool)
        rows, cols = np.nonzero(mask)
        return cls.from_coo(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n))

    # basic properties ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (COO view)."""
        return self._rows

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self._rows, self.col_indices] = self.values
        return out

    def to_scipy(self):
        import scipy.sparse as sps

        return sps.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=self.shape
        )

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_coo(
            self.ncols, self.nrows, self.col_indices, self._rows, self.values
        )

    def diagonal(self) -> np.ndarray:
        d = np.zeros(min(self.shape))
        on = self._rows == self.col_indices
        d[self._rows[on]] = self.values[on]
        return d

    def is_symmetric(self, tol=0.0) -> bool:
        if self.nrows != self.ncols:
            return False
        t = self.transpose()
        if not np.array_equal(t.row_offsets, self.row_offsets) or not np.array_equal(
            t.col_indices, self.col_indices
        ):
            return False
        return bool(np.all(np.abs(t.values - self.values) <= tol))

    def norm_inf(self) -> float:
        if self.nnz == 0:
            return 0.0
        return float(np.bincount(self._rows, np.abs(self.values), self.nrows).max())

    def submatrix(self, rows, cols=None) -> "SparseMatrix":
        """Extract ``A[rows][:, cols]`` keeping the given index order."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = rows if cols is None else np.asarray(cols, dtype=np.int64)
        col_map = np.full(self.ncols, -1, dtype=np.int64)
        col_map[cols] = np.arange(cols.size)
        starts, stops = self.row_offsets[rows], self.row_offsets[rows + 1]
        counts = stops - starts
        take = np.repeat(starts - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        take += np.arange(counts.sum())
        local_rows = np.repeat(np.arange(rows.size), counts)
        local_cols = col_map[self.col_indices[take]]
        keep = local_cols >= 0
        return SparseMatrix.from_coo(
            rows.size, cols.size, local_rows[keep], local_cols[keep], self.values[take][keep]
        )

    def neighbors(self, vertices) -> np.ndarray:
        """Column indices reached from the given rows (adjacency closure step)."""
        vertices = np.asarray(vertices, dtype=np.int64)
        starts, stops = self.row_offsets[vertices], self.row_offsets[vertices + 1]
        if vertices.size == 0:
            return vertices
        pieces = [self.col_indices[a:b] for a, b in zip(starts, stops)]
        return np.unique(np.concatenate(pieces)) if pieces else vertices

    # products -----------------------------------------------------------

    def spmv(self, x) -> np.ndarray:
        return spmv(self, x)

    def __matmul__(self, x):
        return spmv(self, x)


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """y = A x for a vector, or column-wise for a 2-D block of vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.ncols:
        raise DimensionError(f"spmv: x has {x.shape[0]} rows, A has {A.ncols} columns")
    rows = A.row_indices
    if x.ndim == 1:
        return np.bincount(rows, weights=A.values * x[A.col_indices], minlength=A.nrows)
    if x.ndim != 2:
        raise DimensionError("spmv expects a vector or a 2-D block")
    k = x.shape[1]
    prod = A.values[:, None] * x[A.col_indices]
    flat = (rows[:, None] * k + np.arange(k)).ravel()
    return np.bincount(flat, weights=prod.ravel(), minlength=A.nrows * k).reshape(A.nrows, k)


# Matrix Market --------------------------------------------------------------


def read_matrix_market(path) -> SparseMatrix:
    """Read a real coordinate Matrix Market file (general or symmetric)."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 5 or header[0].lower() != "%%matrixmarket":
            raise ValueError(f"{path}: missing %%MatrixMarket header")
        obj, fmt, field_, symmetry = (h.lower() for h in header[1:5])
        if obj != "matrix" or fmt != "coordinate":
            raise ValueError(f"{path}: only 'matrix coordinate' files are supported")
        if field_ not in ("real", "integer", "pattern"):
            raise ValueError(f"{path}: unsupported field '{field_}'")
        if symmetry not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry '{symmetry}'")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            line = fh.readline()
        nrows, ncols, nnz = (int(t) for t in line.split())
        ncol_data = 2 if field_ == "pattern" else 3
        data = np.loadtxt(fh, ndmin=2, max_rows=nnz) if nnz else np.zeros((0, 3))
    if data.shape[0] != nnz or (nnz and data.shape[1] < ncol_data):
        raise ValueError(f"{path}: expected {nnz} entries, found {data.shape[0]}")
    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    vals = np.ones(nnz) if field_ == "pattern" else data[:, 2].astype(np.float64)
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate((rows, cols[off])),
            np.concatenate((cols, rows[off])),
            np.concatenate((vals, vals[off])),
        )
    return SparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(path, A: SparseMatrix, symmetric=False, comment=None):
    """Write ``A`` in coordinate format; ``symmetric`` stores the lower triangle only."""
    if symmetric and not A.is_symmetric():
        raise ValueError("matrix is not symmetric")
    rows, cols, vals = A.row_indices, A.col_indices, A.values
    if symmetric:
        low = rows >= cols
        rows, cols, vals = rows[low], cols[low], vals[low]
    kind = "symmetric" if symmetric else "general"
    with open(Path(path), "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.nrows} {A.ncols} {rows.size}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")


def read_vector(path) -> np.ndarray:
    """Plain-text vector, one value per line."""
    return np.atleast_1d(np.loadtxt(path, dtype=np.float64))


def write_vector(path, v):
    with open(path, "w") as fh:
        for x in np.asarray(v, dtype=np.float64):
            fh.write(f"{float(x)!r}\n")
