"""Streaming sketches: FrequentDirections and SparseFrequentDirections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .la_core import make_rng
from .randsvd import PowerConfig
from .shrink import ALPHA, VerifierState, boosted_sparse_shrink, dense_shrink
from .sparse_core import SparseBuffer, SparseRow


@dataclass(frozen=True)
class SketchConfig:
    ell: int
    d: int
    delta: float = 0.1
    power: PowerConfig = field(default_factory=PowerConfig)
    seed: int | None = 0
    c_verify: float = 2.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        if not 1 <= self.ell <= self.d:
            raise ValueError(f"ell={self.ell} must lie in [1, d={self.d}]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        return ALPHA


class FrequentDirections:
    """Dense FrequentDirections with a 2*ell row buffer.

    Rows fill free slots; once all 2*ell are live the buffer is shrunk back to
    ell rows.  No randomness is involved.
    """

    def __init__(self, d: int, ell: int):
        if not 1 <= ell <= d:
            raise ValueError(f"ell={ell} must lie in [1, d={d}]")
        self.d = d
        self.ell = ell
        self._buf = np.zeros((2 * ell, d))
        self.fill = 0
        self.shrinks = 0

    def append(self, row) -> None:
        if isinstance(row, SparseRow):
            if row.nnz and row.indices[-1] >= self.d:
                raise ValueError("column index out of range")
            self._buf[self.fill] = 0.0
            self._buf[self.fill, row.indices] = row.values
        else:
            row = np.asarray(row, dtype=np.float64)
            if row.shape != (self.d,):
                raise ValueError(f"expected a row of length {self.d}, got {row.shape}")
            self._buf[self.fill] = row
        self.fill += 1
        if self.fill == 2 * self.ell:
            self._compact()

    def extend(self, rows) -> "FrequentDirections":
        for row in rows:
            self.append(row)
        return self

    def _compact(self) -> None:
        B = dense_shrink(self._buf[: self.fill], self.ell)
        self._buf[:] = 0.0
        live = int(np.count_nonzero(np.any(B != 0.0, axis=1)))
        self._buf[:live] = B[:live]
        self.fill = live
        self.shrinks += 1

    def sketch(self) -> np.ndarray:
        """Current ell x d sketch, without disturbing the stream state."""
        if self.fill > self.ell:
            return dense_shrink(self._buf[: self.fill], self.ell)
        return self._buf[: self.ell].copy()

    def finalize(self) -> np.ndarray:
        if self.fill > self.ell:
            self._compact()
        return self._buf[: self.ell].copy()


class SparseFrequentDirections:
    """Streaming sketch whose cost scales with nnz of the input.

    Sparse rows collect in a buffer until it holds ell*d entries or d rows;
    the buffer is then shrunk by boosted sparse shrink and folded into the
    running sketch with an exact dense shrink.
    """

    def __init__(self, config: SketchConfig):
        self.config = config
        self.ell = config.ell
        self.d = config.d
        self.B = np.zeros((self.ell, self.d))
        self.buffer = SparseBuffer(self.d)
        self.verifier = VerifierState(delta=config.delta, c_verify=config.c_verify)
        self.rng = make_rng(config.seed)
        self.flush_count = 0
        self.attempt_total = 0
        self.exact_flushes = 0

    def append(self, row: SparseRow) -> None:
        self.buffer.append_row(row)
        if self.buffer.nnz >= self.ell * self.d or self.buffer.rows == self.d:
            self._flush()

    def extend(self, rows) -> "SparseFrequentDirections":
        for row in rows:
            self.append(row)
        return self

    def _flush(self) -> None:
        report = boosted_sparse_shrink(
            self.buffer, self.ell, self.verifier, self.config.power, self.rng
        )
        self.attempt_total += report.attempts
        self.exact_flushes += report.exact
        self._fold(report.sketch)

    def _fold(self, rows: np.ndarray) -> None:
        self.B = dense_shrink(np.vstack([self.B, rows]), self.ell)
        self.buffer.clear()
        self.flush_count += 1

    def finalize(self) -> np.ndarray:
        """Flush whatever is left in the buffer and return the ell x d sketch.

        Buffers with fewer than ell rows cannot go through sparse shrink; they
        are at most ell*d entries and are folded in densely.
        """
        if self.buffer.rows >= self.ell:
            self._flush()
        elif self.buffer.rows > 0:
            self._fold(self.buffer.densify(cap=self.ell * self.d))
        return self.B.copy()


def merge(B1: np.ndarray, B2: np.ndarray, ell: int) -> np.ndarray:
    """Combine two sketches of disjoint shards into one ell x d sketch."""
    B1 = np.atleast_2d(np.asarray(B1, dtype=np.float64))
    B2 = np.atleast_2d(np.asarray(B2, dtype=np.float64))
    if B1.shape[1] != B2.shape[1]:
        raise ValueError(f"column mismatch: {B1.shape[1]} vs {B2.shape[1]}")
    return dense_shrink(np.vstack([B1, B2]), ell)


def fd_sketch(rows, d: int, ell: int) -> np.ndarray:
    return FrequentDirections(d, ell).extend(rows).finalize()


def sfd_sketch(rows, config: SketchConfig) -> np.ndarray:
    return SparseFrequentDirections(config).extend(rows).finalize()
