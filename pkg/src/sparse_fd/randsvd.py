"""Randomized block power method (simultaneous iteration) on a sparse buffer."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .la_core import gaussian_matrix, orthonormalize
from .sparse_core import SparseBuffer

FAST_Q = 8


@dataclass(frozen=True)
class PowerConfig:
    """Iteration count policy: q = max(1, ceil(q_constant * ln(m / eps) / eps))."""

    epsilon: float = 0.25
    q_constant: float = 1.0
    q_override: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.q_constant <= 0:
            raise ValueError("q_constant must be positive")
        if self.q_override is not None and self.q_override < 0:
            raise ValueError("q_override must be non-negative")

    def iterations(self, m: int) -> int:
        if self.q_override is not None:
            return int(self.q_override)
        eps = self.epsilon
        return max(1, math.ceil(self.q_constant * math.log(max(m, 1) / eps) / eps))

    @classmethod
    def fast(cls, epsilon: float = 0.25) -> "PowerConfig":
        return cls(epsilon=epsilon, q_override=FAST_Q)


def simultaneous_iteration(
    A: SparseBuffer,
    k: int,
    cfg: PowerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Orthonormal m x k basis approximating the top-k left singular subspace of A.

    The block is re-orthonormalised after every multiplication by A A^T, which
    spans the same space as GramSchmidt(A (A^T A)^q G) without the overflow.
    Only sparse products touch A, so a sweep costs O(nnz(A) k + m k^2).
    """
    m, d = A.shape
    if not 1 <= k <= min(m, d):
        raise ValueError(f"k={k} outside [1, min({m}, {d})]")
    q = cfg.iterations(m)
    G = gaussian_matrix(d, k, rng)
    Y = orthonormalize(_finite(A.matmat(G)))
    for _ in range(q):
        Y = orthonormalize(_finite(A.matmat(A.rmatmat(Y))))
    return Y


def _finite(M: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(M)):
        raise NumericalError("non-finite intermediate in simultaneous iteration")
    return M
