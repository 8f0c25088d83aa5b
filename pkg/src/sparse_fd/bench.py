"""Synthetic data, accuracy metrics and the timing harness."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, fields
from typing import Iterable, Iterator

import numpy as np

from .errors import ConvergenceError
from .la_core import gaussian_matrix, jacobi_eigh, make_rng, orthonormalize, spectral_norm_sym, svd_top
from .randsvd import PowerConfig
from .sketch import FrequentDirections, SketchConfig, SparseFrequentDirections
from .sparse_core import SparseBuffer, SparseRow

P_HEAD = 0.9
# Gram matrices up to this many columns are diagonalised directly
DENSE_TAIL_LIMIT = 2000
TAIL_MAX_SWEEPS = 300
TAIL_TOL = 1e-10
COV_ITERATIONS = 1000
DEGENERATE_TAIL = 1e-12

# Table-1 defaults and sweep ranges
DEFAULTS = {"n": 10_000, "d": 1000, "ell": 50, "nnz": 100}
SWEEPS = {
    "n": [10_000, 20_000, 30_000, 40_000, 50_000, 60_000],
    "d": [1000, 2000, 3000, 4000, 5000, 6000],
    "ell": [5, 10, 25, 50, 75, 100],
    "nnz": [5, 50, 100, 200, 300, 400, 500],
}
DEFAULT_K = 10

CSV_HEADER = ["algo", "n", "d", "ell", "z", "k", "proj_err", "cov_err", "wall_seconds", "seed"]


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    z: int
    seed: int = 0
    p_head: float = P_HEAD

    def __post_init__(self):
        if not 0 < self.z <= self.d:
            raise ValueError(f"need 0 < z <= d, got z={self.z}, d={self.d}")
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @property
    def head_cols(self) -> int:
        return min(math.ceil(1.5 * self.z), self.d)


def generate_synthetic(spec: SyntheticSpec) -> Iterator[SparseRow]:
    """Rows with exactly z entries of +-1, concentrated on a head block.

    Each non-zero independently lands in the first ceil(1.5 z) columns with
    probability p_head and in the remaining columns otherwise, uniformly and
    without repeats inside its group.  A group that runs out of free columns
    hands its draws to the other one.
    """
    rng = make_rng(spec.seed)
    d, z, head = spec.d, spec.z, spec.head_cols
    tail = d - head
    for _ in range(spec.n):
        h = int(np.count_nonzero(rng.random(z) < spec.p_head))
        if z - h > tail:
            h = z - tail
        cols = np.concatenate([
            rng.choice(head, size=h, replace=False),
            head + rng.choice(tail, size=z - h, replace=False) if z > h else np.empty(0, np.int64),
        ]).astype(np.int64)
        cols.sort()
        vals = np.where(rng.random(z) < 0.5, -1.0, 1.0)
        yield SparseRow(cols, vals)


def synthetic_buffer(spec: SyntheticSpec) -> SparseBuffer:
    return SparseBuffer(spec.d, capacity=max(64, spec.n * spec.z)).extend(generate_synthetic(spec))


@dataclass
class MetricsRow:
    algo: str
    n: int
    d: int
    ell: int
    z: int
    k: int
    proj_err: float | None
    cov_err: float | None
    wall_seconds: float
    seed: int | None = None

    def csv_fields(self) -> list:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out.append("nan")
            elif isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(str(v))
        return out


def write_metrics_csv(rows: Iterable[MetricsRow], dest) -> None:
    """Write rows under CSV_HEADER to a path or an open text file."""
    if hasattr(dest, "write"):
        w = csv.writer(dest)
        w.writerow(CSV_HEADER)
        w.writerows(row.csv_fields() for row in rows)
        return
    with open(dest, "w", newline="") as fh:
        write_metrics_csv(rows, fh)


def read_metrics_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _dense_tail(A: SparseBuffer, k: int):
    w = np.linalg.eigvalsh(A.gram())[::-1]
    sig = np.sqrt(np.maximum(w[:k], 0.0))
    return sig


def _randomized_tail(A: SparseBuffer, k: int, seed: int):
    m, d = A.shape
    b = min(k + 5, m, d)
    rng = make_rng(seed)
    Y = orthonormalize(A.matmat(gaussian_matrix(d, b, rng)))
    prev = None
    for _ in range(TAIL_MAX_SWEEPS):
        W = A.rmatmat(Y)
        w, _ = jacobi_eigh(W.T @ W)
        est = np.maximum(w[:k], 0.0)
        if prev is not None and np.max(np.abs(est - prev)) <= TAIL_TOL * max(est[0], 1e-300):
            return np.sqrt(est)
        prev = est
        Y = orthonormalize(A.matmat(W))
    raise ConvergenceError(
        f"top-{k} singular values did not settle within {TAIL_MAX_SWEEPS} sweeps"
    )


def exact_tail(A: SparseBuffer, k: int, method: str = "auto", seed: int = 0):
    """Return (||A - A_k||_F^2, top-k singular values of A).

    ``method`` is "dense" (eigenvalues of A^T A), "randomized" (block power
    iteration run to convergence) or "auto", which picks dense up to
    DENSE_TAIL_LIMIT columns.
    """
    m, d = A.shape
    if k < 0 or k > min(m, d):
        raise ValueError(f"k={k} outside [0, min({m}, {d})]")
    if k == 0:
        return A.frob_sq, np.empty(0)
    if method == "auto":
        method = "dense" if d <= DENSE_TAIL_LIMIT else "randomized"
    if method == "dense":
        sig = _dense_tail(A, k)
    elif method == "randomized":
        sig = _randomized_tail(A, k, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    tail = max(A.frob_sq - float(sig @ sig), 0.0)
    return tail, sig


def proj_err(A: SparseBuffer, B: np.ndarray, k: int, tail: float | None = None):
    """||A - A V_k V_k^T||_F^2 / ||A - A_k||_F^2, or None when undefined.

    The metric is undefined when A has rank <= k, or when the sketch has
    fewer than k non-zero singular values.
    """
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if B.shape[1] != A.d:
        raise ValueError("sketch and matrix column counts differ")
    if k < 1 or k > B.shape[0]:
        raise ValueError(f"k={k} outside [1, {B.shape[0]}]")
    if tail is None:
        tail, _ = exact_tail(A, k)
    if tail <= DEGENERATE_TAIL * A.frob_sq:
        return None
    res = svd_top(B, k) if B.shape[0] <= B.shape[1] else None
    if res is None:
        raise ValueError("sketch must have no more rows than columns")
    if res.rank < k:
        return None
    AV = A.matmat(res.right)
    # per row: ||a||^2 - ||V_k^T a||^2, summed
    residual = A.frob_sq - float(np.sum(AV * AV))
    return residual / tail


def cov_err(A: SparseBuffer, B: np.ndarray, iterations: int = COV_ITERATIONS, seed: int = 0) -> float:
    """||A^T A - B^T B||_2 / ||A||_F^2 by power iteration on the difference."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if B.shape[1] != A.d:
        raise ValueError("sketch and matrix column counts differ")
    if A.frob_sq == 0.0:
        return 0.0

    def apply(x):
        return A.gram_apply(x) - B.T @ (B @ x)

    est = spectral_norm_sym(apply, A.d, iterations, make_rng(seed))
    return abs(est) / A.frob_sq


def build_sketch(algo: str, rows: Iterable[SparseRow], d: int, ell: int,
                 delta: float = 0.1, power: PowerConfig | None = None,
                 seed: int | None = 0):
    """Stream rows into a fresh sketch; returns (sketch, sketcher)."""
    if algo == "fd":
        sk = FrequentDirections(d, ell)
    elif algo == "sfd":
        sk = SparseFrequentDirections(
            SketchConfig(ell=ell, d=d, delta=delta, power=power or PowerConfig(), seed=seed)
        )
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    for row in rows:
        sk.append(row)
    return sk.finalize(), sk


def timed_run(algo: str, A: SparseBuffer, ell: int, k: int = DEFAULT_K, *,
              delta: float = 0.1, power: PowerConfig | None = None, seed: int | None = 0,
              z: int | None = None, metrics: bool = True, tail: float | None = None):
    """Sketch ``A`` row by row and report accuracy and wall time.

    Only sketch construction is timed.  Returns (MetricsRow, sketch).
    """
    n, d = A.shape
    rows = list(A.iter_rows())
    start = time.perf_counter()
    B, _ = build_sketch(algo, rows, d, ell, delta=delta, power=power, seed=seed)
    wall = time.perf_counter() - start
    pe = ce = None
    if metrics:
        if 1 <= k < ell:
            if tail is None:
                tail, _ = exact_tail(A, k)
            pe = proj_err(A, B, k, tail=tail)
        ce = cov_err(A, B)
    if z is None:
        z = round(A.nnz / n) if n else 0
    row = MetricsRow(algo, n, d, ell, z, k, pe, ce, wall, seed if algo == "sfd" else None)
    return row, B


def run_sweep(sweep: str, scale: float = 1.0, seed: int = 0, k: int = DEFAULT_K,
              power: PowerConfig | None = None, delta: float = 0.1,
              algos=("fd", "sfd"), metrics: bool = True, values=None, log=None) -> list:
    """FD and SFD across one swept parameter, others at their defaults.

    ``scale`` multiplies the row count only (both the default and the n
    sweep), which keeps the z and ell ranges valid.
    """
    if sweep not in SWEEPS:
        raise ValueError(f"unknown sweep {sweep!r}; choose from {sorted(SWEEPS)}")
    if scale <= 0:
        raise ValueError("scale must be positive")
    out = []
    for value in values if values is not None else SWEEPS[sweep]:
        p = dict(DEFAULTS)
        p[sweep] = value
        n = max(1, int(round(p["n"] * scale)))
        d, ell, z = p["d"], p["ell"], p["nnz"]
        A = synthetic_buffer(SyntheticSpec(n=n, d=d, z=z, seed=seed))
        k_eff = min(k, ell - 1)
        tail = exact_tail(A, k_eff)[0] if metrics and k_eff >= 1 else None
        for algo in algos:
            row, _ = timed_run(algo, A, ell, k_eff, delta=delta, power=power, seed=seed,
                               z=z, metrics=metrics, tail=tail)
            out.append(row)
            if log is not None:
                log(row)
    return out
