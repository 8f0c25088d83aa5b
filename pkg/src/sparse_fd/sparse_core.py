"""CSR row buffer with nnz/Frobenius bookkeeping and O(nnz) products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SparseRow:
    """One streamed row: strictly increasing column indices and their values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        val = np.ascontiguousarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or len(idx) != len(val):
            raise ValueError("indices and values must be 1-d and of equal length")
        if len(idx) > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("column indices must be strictly increasing")
        if len(idx) and idx[0] < 0:
            raise ValueError("negative column index")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dense(cls, x) -> "SparseRow":
        x = np.asarray(x, dtype=np.float64)
        idx = np.flatnonzero(x)
        return cls(idx, x[idx])

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self, d: int) -> np.ndarray:
        out = np.zeros(d)
        out[self.indices] = self.values
        return out


@njit(cache=True)
def _csr_matmat(indptr, indices, data, X, out):
    m = len(indptr) - 1
    k = X.shape[1]
    for i in range(m):
        for p in range(indptr[i], indptr[i + 1]):
            v = data[p]
            j = indices[p]
            for c in range(k):
                out[i, c] += v * X[j, c]
    return out


@njit(cache=True)
def _csr_rmatmat(indptr, indices, data, Y, out):
    m = len(indptr) - 1
    k = Y.shape[1]
    for i in range(m):
        for p in range(indptr[i], indptr[i + 1]):
            v = data[p]
            j = indices[p]
            for c in range(k):
                out[j, c] += v * Y[i, c]
    return out


class SparseBuffer:
    """Rows of an m x d sparse matrix in CSR layout, appended one at a time.

    Storage grows geometrically, so appends are amortised O(nnz(row)).
    ``nnz`` counts stored entries (explicit zeros included) and ``frob_sq``
    is the running sum of squared values.
    """

    def __init__(self, d: int, capacity: int = 64):
        if d < 1:
            raise ValueError("column count must be positive")
        self.d = int(d)
        self._indptr = np.zeros(16, dtype=np.int64)
        self._indices = np.empty(capacity, dtype=np.int64)
        self._data = np.empty(capacity, dtype=np.float64)
        self._rows = 0
        self.nnz = 0
        self.frob_sq = 0.0

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def shape(self) -> tuple:
        return (self._rows, self.d)

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr[: self._rows + 1]

    @property
    def indices(self) -> np.ndarray:
        return self._indices[: self.nnz]

    @property
    def data(self) -> np.ndarray:
        return self._data[: self.nnz]

    def __len__(self):
        return self._rows

    def append_row(self, row: SparseRow) -> "SparseBuffer":
        idx, val = row.indices, row.values
        if len(idx) and idx[-1] >= self.d:
            raise ValueError(f"column index {idx[-1]} out of range for d={self.d}")
        if not np.all(np.isfinite(val)):
            raise ValueError("row contains non-finite values")
        need = self.nnz + len(idx)
        if need > len(self._data):
            cap = max(need, 2 * len(self._data))
            self._indices = np.resize(self._indices, cap)
            self._data = np.resize(self._data, cap)
        if self._rows + 2 > len(self._indptr):
            self._indptr = np.resize(self._indptr, 2 * len(self._indptr))
        self._indices[self.nnz:need] = idx
        self._data[self.nnz:need] = val
        self.nnz = need
        self._rows += 1
        self._indptr[self._rows] = need
        self.frob_sq += float(val @ val)
        return self

    def extend(self, rows) -> "SparseBuffer":
        for row in rows:
            self.append_row(row)
        return self

    def clear(self) -> None:
        self._rows = 0
        self.nnz = 0
        self.frob_sq = 0.0

    def row(self, i: int) -> SparseRow:
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return SparseRow(self._indices[lo:hi].copy(), self._data[lo:hi].copy())

    def iter_rows(self):
        for i in range(self._rows):
            yield self.row(i)

    def matmat(self, X: np.ndarray) -> np.ndarray:
        """A' X for a dense d x k block."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.shape[0] != self.d:
            raise ValueError(f"expected {self.d} rows, got {X.shape[0]}")
        out = np.zeros((self._rows, X.shape[1]))
        return _csr_matmat(self.indptr, self.indices, self.data, X, out)

    def rmatmat(self, Y: np.ndarray) -> np.ndarray:
        """A'^T Y for a dense m x k block."""
        Y = np.ascontiguousarray(Y, dtype=np.float64)
        if Y.shape[0] != self._rows:
            raise ValueError(f"expected {self._rows} rows, got {Y.shape[0]}")
        out = np.zeros((self.d, Y.shape[1]))
        return _csr_rmatmat(self.indptr, self.indices, self.data, Y, out)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}")
        return self.matmat(x[:, None])[:, 0]

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self._rows,):
            raise ValueError(f"expected a vector of length {self._rows}")
        return self.rmatmat(y[:, None])[:, 0]

    def gram_apply(self, x: np.ndarray) -> np.ndarray:
        """A'^T (A' x) without forming A'^T A'."""
        return self.rmatvec(self.matvec(x))

    def densify(self, cap: int | None = None) -> np.ndarray:
        if cap is not None and self.nnz > cap:
            raise ValueError(f"buffer holds {self.nnz} entries, above the cap {cap}")
        out = np.zeros((self._rows, self.d))
        rows = np.repeat(np.arange(self._rows), np.diff(self.indptr))
        # duplicates are impossible, so plain assignment is exact
        out[rows, self.indices] = self.data
        return out

    @classmethod
    def from_dense(cls, A) -> "SparseBuffer":
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        buf = cls(A.shape[1])
        for a in A:
            buf.append_row(SparseRow.from_dense(a))
        return buf

    def recompute_frob_sq(self) -> float:
        return float(self.data @ self.data)

    def gram(self, chunk: int = 1024) -> np.ndarray:
        """Dense d x d A'^T A', accumulated over row chunks."""
        out = np.zeros((self.d, self.d))
        ptr = self.indptr
        for lo in range(0, self._rows, chunk):
            hi = min(lo + chunk, self._rows)
            block = np.zeros((hi - lo, self.d))
            rows = np.repeat(np.arange(hi - lo), np.diff(ptr[lo:hi + 1]))
            block[rows, self._indices[ptr[lo]:ptr[hi]]] = self._data[ptr[lo]:ptr[hi]]
            out += block.T @ block
        return out
