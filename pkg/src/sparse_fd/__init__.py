"""Streaming matrix sketches with input-sparsity running time."""

from .errors import ConvergenceError, NumericalError, RetryLimitExceeded, SketchError
from .la_core import SvdResult, make_rng, orthonormalize, svd_top
from .randsvd import PowerConfig, simultaneous_iteration
from .shrink import (
    ALPHA,
    ShrinkReport,
    VerifierState,
    boosted_sparse_shrink,
    dense_shrink,
    sparse_shrink,
    verify_spectral,
)
from .sketch import FrequentDirections, SketchConfig, SparseFrequentDirections, merge
from .sparse_core import SparseBuffer, SparseRow

__version__ = "0.1.0"

__all__ = [
    "ALPHA",
    "ConvergenceError",
    "FrequentDirections",
    "NumericalError",
    "PowerConfig",
    "RetryLimitExceeded",
    "ShrinkReport",
    "SketchConfig",
    "SketchError",
    "SparseBuffer",
    "SparseFrequentDirections",
    "SparseRow",
    "SvdResult",
    "VerifierState",
    "boosted_sparse_shrink",
    "dense_shrink",
    "make_rng",
    "merge",
    "orthonormalize",
    "simultaneous_iteration",
    "sparse_shrink",
    "svd_top",
    "verify_spectral",
]
