"""Shrink operators and the randomized spectral verifier.

``dense_shrink`` is the exact-SVD step of FrequentDirections.
``sparse_shrink`` replaces the SVD of the buffer with simultaneous iteration,
and ``boosted_sparse_shrink`` reruns it until ``verify_spectral`` accepts
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, RetryLimitExceeded
from .la_core import svd_top, unit_sphere_vector
from .randsvd import PowerConfig, simultaneous_iteration
from .sparse_core import SparseBuffer

ALPHA = 6.0 / 41.0
MAX_ATTEMPTS = 64
# Frobenius drops at or below this fraction of ||A'||_F^2 are exact recovery
EXACT_DROP_TOL = 1e-10
# slack on the log-magnitude test, per power step, to absorb rounding
LOG_SLACK = 1e-13


@dataclass
class VerifierState:
    """Counter shared by every verify_spectral call of one sketch run."""

    delta: float = 0.1
    c_verify: float = 2.0
    i: int = 0
    spent: float = 0.0
    budgets: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.c_verify <= 0:
            raise ValueError("c_verify must be positive")

    def next_budget(self) -> float:
        self.i += 1
        delta_i = self.delta / (2.0 * self.i * self.i)
        self.spent += delta_i
        self.budgets.append(delta_i)
        return delta_i

    def steps(self, d: int, delta_i: float) -> int:
        return max(1, math.ceil(self.c_verify * math.log2(d / delta_i)))


@dataclass
class ShrinkReport:
    sketch: np.ndarray
    delta_hat: float
    attempts: int
    exact: bool = False


def shrink_delta(frob_a: float, frob_b: float, ell: int) -> float:
    """Per-direction loss bound (||A'||_F^2 - ||B'||_F^2) / (alpha * ell)."""
    return (frob_a - frob_b) / (ALPHA * ell)


def _shrink_rows(singular: np.ndarray, right: np.ndarray, ell: int) -> np.ndarray:
    lam = singular[:ell]
    lam_sq = lam * lam
    tilde = np.sqrt(np.maximum(lam_sq - lam_sq[ell - 1], 0.0))
    tilde[ell - 1] = 0.0
    return tilde[:, None] * right[:, :ell].T


def dense_shrink(A: np.ndarray, ell: int) -> np.ndarray:
    """Exact shrink: top-ell SVD, subtract the ell-th squared singular value."""
    A = np.asarray(A, dtype=np.float64)
    m, d = A.shape
    if not 1 <= ell <= m:
        raise ValueError(f"ell={ell} must lie in [1, rows={m}]")
    if ell > d:
        raise ValueError(f"ell={ell} exceeds column count {d}")
    if m <= d:
        res = svd_top(A, ell)
        return _shrink_rows(res.singular, res.right, ell)
    # tall input: the right singular vectors are the left ones of A^T
    res = svd_top(A.T, ell)
    return _shrink_rows(res.singular, res.left, ell)


def sparse_shrink(
    A: SparseBuffer,
    ell: int,
    cfg: PowerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Shrink a sparse buffer through its approximate top-ell subspace.

    Work is O(nnz(A) * ell) per power sweep plus dense ell x d steps; A is
    never densified.
    """
    m, d = A.shape
    if not 1 <= ell <= m:
        raise ValueError(f"ell={ell} must lie in [1, rows={m}]")
    if ell > d:
        raise ValueError(f"ell={ell} exceeds column count {d}")
    Z = simultaneous_iteration(A, ell, cfg, rng)
    P = A.rmatmat(Z).T
    if not np.all(np.isfinite(P)):
        raise NumericalError("non-finite projection in sparse_shrink")
    res = svd_top(P, ell)
    return _shrink_rows(res.singular, res.right, ell)


def verify_spectral(
    apply_c: Callable[[np.ndarray], np.ndarray],
    d: int,
    state: VerifierState,
    rng: np.random.Generator,
) -> bool:
    """True when ||C^t x|| <= 1 for a random unit x, t = c log2(d / delta_i).

    Magnitudes are tracked as a running log so long power chains neither
    overflow nor underflow.  For PSD C the per-step growth ratios are
    non-decreasing, so once the log-magnitude is positive and still growing
    the answer cannot change.
    """
    delta_i = state.next_budget()
    t = state.steps(d, delta_i)
    tol = LOG_SLACK * t
    x = unit_sphere_vector(d, rng)
    log_mag = 0.0
    for _ in range(t):
        y = np.asarray(apply_c(x), dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise NumericalError("verifier operator returned non-finite values")
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return True
        ratio = ny / np.linalg.norm(x)
        log_mag += math.log(ratio)
        if log_mag > tol and ratio >= 1.0:
            return False
        x = y / ny
    return log_mag <= tol


def difference_operator(A: SparseBuffer, B: np.ndarray, scale: float = 1.0):
    """x -> scale * (A^T A x - B^T B x), matrix-free."""

    def apply(x):
        return scale * (A.gram_apply(x) - B.T @ (B @ x))

    return apply


def boosted_sparse_shrink(
    A: SparseBuffer,
    ell: int,
    state: VerifierState,
    cfg: PowerConfig,
    rng: np.random.Generator,
    max_attempts: int = MAX_ATTEMPTS,
) -> ShrinkReport:
    """Repeat sparse_shrink until the spectral verifier signs off."""
    d = A.d
    total = A.frob_sq
    for attempt in range(1, max_attempts + 1):
        B = sparse_shrink(A, ell, cfg, rng)
        drop = total - float(np.sum(B * B))
        delta_hat = shrink_delta(total, total - max(drop, 0.0), ell)
        if drop <= EXACT_DROP_TOL * total:
            return ShrinkReport(B, delta_hat, attempt, exact=True)
        op = difference_operator(A, B, scale=2.0 / delta_hat)
        if verify_spectral(op, d, state, rng):
            return ShrinkReport(B, delta_hat, attempt)
    raise RetryLimitExceeded(
        f"verifier rejected {max_attempts} consecutive sparse shrinks"
    )
