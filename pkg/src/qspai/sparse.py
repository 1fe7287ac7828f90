"""Symmetric sparse matrices in compressed-row form and the few kernels built on them."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

DROP_TOL = 1e-300


class SymSparseMatrix:
    """Full-storage CSR matrix that is symmetric in pattern and value.

    Instances are immutable; the underlying arrays are marked read-only.
    """

    __slots__ = ("n", "indptr", "indices", "data", "_csr")

    def __init__(self, n, indptr, indices, data, *, check=True):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False
        if check:
            self._validate()
        self._csr = sp.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def _validate(self):
        if self.n < 1:
            raise ValueError("matrix dimension must be positive")
        if self.indptr.shape != (self.n + 1,) or self.indptr[0] != 0:
            raise ValueError("malformed indptr")
        if self.indices.shape != self.data.shape or self.indptr[-1] != len(self.indices):
            raise ValueError("indices/data length does not match indptr")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite matrix entry")
        for i in range(self.n):
            cols = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {i}: column indices not strictly increasing")
        t = self._transpose_arrays()
        if not (np.array_equal(t[1], self.indices) and np.array_equal(t[2], self.data)):
            raise ValueError("matrix is not symmetric")

    def _transpose_arrays(self):
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        order = np.lexsort((rows, self.indices))
        counts = np.bincount(self.indices, minlength=self.n)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        return indptr, rows[order], self.data[order]

    @classmethod
    def from_coo(cls, n, rows, cols, vals):
        """Build from triplets; duplicates are summed and near-zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        keep = np.abs(vals) >= DROP_TOL
        m = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        keep = np.abs(m.data) >= DROP_TOL
        if not keep.all():
            m.data[~keep] = 0.0
            m.eliminate_zeros()
        return cls(n, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square 2-D array")
        r, c = np.nonzero(np.abs(a) >= DROP_TOL)
        return cls.from_coo(a.shape[0], r, c, a[r, c])

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n), check=False)

    @property
    def nnz(self):
        return len(self.data)

    def to_dense(self):
        return self._csr.toarray()

    def to_scipy(self):
        return self._csr.copy()

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def same_pattern(self, other):
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __eq__(self, other):
        if not isinstance(other, SymSparseMatrix):
            return NotImplemented
        return self.same_pattern(other) and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self):
        return f"SymSparseMatrix(n={self.n}, nnz={self.nnz})"


def spmv(a: SymSparseMatrix, x) -> np.ndarray:
    """Return ``a @ x``; each row is summed in stored column order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError(f"vector length {x.shape} does not match matrix dimension {a.n}")
    return a._csr @ x


def column_support(a: SymSparseMatrix, j: int) -> np.ndarray:
    """Ascending row indices of the nonzeros in column ``j``."""
    if not 0 <= j < a.n:
        raise IndexError(f"column {j} out of range for n={a.n}")
    # symmetric storage: column j support == row j support
    return a.indices[a.indptr[j]:a.indptr[j + 1]].copy()


def principal_submatrix(a: SymSparseMatrix, s) -> np.ndarray:
    """Dense ``a[s][:, s]`` for a strictly ascending index list ``s``."""
    s = np.asarray(s, dtype=np.int64)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("index list must be a non-empty 1-D sequence")
    if np.any(np.diff(s) <= 0):
        raise ValueError("index list must be strictly ascending without duplicates")
    if s[0] < 0 or s[-1] >= a.n:
        raise IndexError("index out of range")
    out = np.zeros((len(s), len(s)))
    for r, i in enumerate(s):
        cols, vals = a.row(i)
        pos = np.searchsorted(s, cols)
        pos_ok = pos < len(s)
        hit = pos_ok.copy()
        hit[pos_ok] = s[pos[pos_ok]] == cols[pos_ok]
        out[r, pos[hit]] = vals[hit]
    return out


def symmetrize(n, indptr, indices, data) -> SymSparseMatrix:
    """Replace each off-diagonal pair by its mean.

    Takes raw CSR arrays whose *pattern* must already be symmetric.
    """
    raw = sp.csr_matrix((np.asarray(data, dtype=np.float64), indices, indptr), shape=(n, n))
    raw.sort_indices()
    tr = raw.T.tocsr()
    tr.sort_indices()
    if not (np.array_equal(raw.indptr, tr.indptr) and np.array_equal(raw.indices, tr.indices)):
        raise ValueError("sparsity pattern is not symmetric")
    # (a + b) / 2 is commutative in IEEE arithmetic, so the result is exactly symmetric
    avg = (raw.data + tr.data) / 2
    return SymSparseMatrix(n, raw.indptr, raw.indices, avg)


def write_matrix_market(a: SymSparseMatrix, path) -> Path:
    path = Path(path)
    scipy.io.mmwrite(str(path), a.to_scipy().tocoo(), symmetry="symmetric", precision=17)
    return path


def read_matrix_market(path) -> SymSparseMatrix:
    m = sp.coo_matrix(scipy.io.mmread(str(path)))
    if m.shape[0] != m.shape[1]:
        raise ValueError("Matrix Market file is not square")
    return SymSparseMatrix.from_coo(m.shape[0], m.row, m.col, m.data)
