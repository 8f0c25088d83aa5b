"""Small dense linear algebra used by the sketches.

Everything here targets short-fat matrices (a few hundred rows at most, but
possibly thousands of columns).  The SVD goes through the m x m Gram matrix
and a cyclic Jacobi eigensolver, so no LAPACK driver is needed on the hot
path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import NumericalError

# relative threshold below which a singular value counts as zero
RANK_TOL = 1e-10
# Jacobi stops once the off-diagonal Frobenius norm drops below this * ||A||_F^2
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# residual threshold for Gram-Schmidt, relative to the largest input column
GS_TOL = 1e-12


@dataclass
class SvdResult:
    """Top-r singular triplets, singular values in descending order.

    ``left`` is m x r and ``right`` is d x r.  Columns belonging to
    singular values under ``RANK_TOL * singular[0]`` are zero and are listed
    in ``deficient``.
    """

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray
    deficient: tuple = ()

    @property
    def rank(self) -> int:
        return len(self.singular) - len(self.deficient)


def make_rng(seed: int | None) -> np.random.Generator:
    """PCG64 generator; every random draw in the package goes through one."""
    return np.random.Generator(np.random.PCG64(seed))


def _check_finite(a: np.ndarray, what: str = "input") -> None:
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"non-finite values in {what}")


@njit(cache=True)
def _jacobi_eigh(G, tol, max_sweeps):
    # cyclic Jacobi on a symmetric matrix, returns (eigenvalues, eigenvectors as
    # columns, sweeps used); G is overwritten
    n = G.shape[0]
    V = np.eye(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * G[i, j] * G[i, j]
        if np.sqrt(off) < tol:
            w = np.empty(n)
            for i in range(n):
                w[i] = G[i, i]
            return w, V, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = G[p, q]
                if apq == 0.0:
                    continue
                app = G[p, p]
                aqq = G[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    gkp = G[k, p]
                    gkq = G[k, q]
                    G[k, p] = c * gkp - s * gkq
                    G[k, q] = s * gkp + c * gkq
                for k in range(n):
                    gpk = G[p, k]
                    gqk = G[q, k]
                    G[p, k] = c * gpk - s * gqk
                    G[q, k] = s * gpk + c * gqk
                G[p, q] = 0.0
                G[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = G[i, i]
    return w, V, -1


def jacobi_eigh(G: np.ndarray, tol: float | None = None):
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    ``tol`` is an absolute bound on the off-diagonal Frobenius norm; by
    default ``JACOBI_TOL`` times the trace norm of ``G``.
    """
    G = np.array(G, dtype=np.float64, order="C", copy=True)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    _check_finite(G)
    if tol is None:
        scale = np.abs(G).sum() if G.size else 0.0
        tol = JACOBI_TOL * max(scale, np.finfo(float).tiny)
    w, V, sweeps = _jacobi_eigh(G, tol, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericalError("Jacobi eigensolver did not converge")
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


@njit(cache=True)
def _mgs_rows(W, tol):
    # modified Gram-Schmidt with one reorthogonalisation pass, acting on the
    # rows of W (k x n) in place
    k, n = W.shape
    for j in range(k):
        for _ in range(2):
            for i in range(j):
                dot = 0.0
                for t in range(n):
                    dot += W[i, t] * W[j, t]
                if dot != 0.0:
                    for t in range(n):
                        W[j, t] -= dot * W[i, t]
        nrm = 0.0
        for t in range(n):
            nrm += W[j, t] * W[j, t]
        nrm = np.sqrt(nrm)
        if nrm < tol or nrm == 0.0:
            for t in range(n):
                W[j, t] = 0.0
        else:
            for t in range(n):
                W[j, t] /= nrm
    return W


def orthonormalize(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the columns of ``M`` (n x k, n >= k).

    Columns that are numerically dependent on earlier ones come back as zero
    columns rather than being completed at random.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError("orthonormalize expects a 2-d array")
    n, k = M.shape
    if n < k:
        raise ValueError(f"need at least as many rows as columns, got {n} x {k}")
    _check_finite(M)
    W = np.ascontiguousarray(M.T)
    if k == 0 or n == 0:
        return W.T.copy()
    biggest = np.sqrt((W * W).sum(axis=1).max())
    _mgs_rows(W, GS_TOL * biggest)
    return np.ascontiguousarray(W.T)


def svd_top(A: np.ndarray, r: int) -> SvdResult:
    """Top-``r`` SVD of a short-fat matrix (m <= d) via its Gram matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("svd_top expects a 2-d array")
    m, d = A.shape
    if m > d:
        raise ValueError(f"svd_top handles m <= d only, got {m} x {d}")
    if not 1 <= r <= m:
        raise ValueError(f"rank {r} outside [1, {m}]")
    _check_finite(A)

    G = A @ A.T
    G = 0.5 * (G + G.T)
    fro_sq = float(np.trace(G))
    w, U = jacobi_eigh(G, tol=JACOBI_TOL * max(fro_sq, np.finfo(float).tiny))
    w = w[:r]
    U = np.ascontiguousarray(U[:, :r])
    singular = np.sqrt(np.maximum(w, 0.0))

    cutoff = RANK_TOL * singular[0] if r else 0.0
    keep = singular > cutoff if singular[0] > 0 else np.zeros(r, dtype=bool)
    # right vectors A^T u_i / s_i, re-orthogonalised so that small singular
    # values do not drag in Gram-matrix roundoff
    W = A.T @ U
    W[:, ~keep] = 0.0
    V = orthonormalize(W)
    lost = keep & ~np.any(V != 0.0, axis=0)
    keep &= ~lost
    singular = np.where(keep, singular, 0.0)
    V[:, ~keep] = 0.0
    U = U.copy()
    U[:, ~keep] = 0.0
    deficient = tuple(int(i) for i in np.flatnonzero(~keep))
    return SvdResult(left=U, singular=singular, right=V, deficient=deficient)


def gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValueError("gaussian_matrix needs positive dimensions")
    return rng.standard_normal((rows, cols))


def unit_sphere_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform direction on the unit sphere in R^d (normalised Gaussian)."""
    if d < 1:
        raise ValueError("dimension must be positive")
    while True:
        x = rng.standard_normal(d)
        nrm = np.linalg.norm(x)
        if nrm > 0.0:
            return x / nrm


def spectral_norm_sym(
    apply: Callable[[np.ndarray], np.ndarray],
    d: int,
    iterations: int,
    rng: np.random.Generator,
) -> float:
    """Power iteration estimate of the largest eigenvalue of a PSD operator.

    Returns the last Rayleigh quotient, which never overestimates the norm.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    x = unit_sphere_vector(d, rng)
    rayleigh = 0.0
    for _ in range(iterations):
        y = np.asarray(apply(x), dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise NumericalError("operator returned non-finite values")
        rayleigh = float(x @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
    return rayleigh
