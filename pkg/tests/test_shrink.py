import math

import numpy as np
import pytest

from sparse_fd import (
    PowerConfig,
    SparseBuffer,
    VerifierState,
    boosted_sparse_shrink,
    dense_shrink,
    make_rng,
    sparse_shrink,
    verify_spectral,
)
from sparse_fd.errors import NumericalError, RetryLimitExceeded
from sparse_fd.shrink import difference_operator, shrink_delta

from conftest import lapack_singular_values, min_eig, random_sparse, spectral_norm_dense


def diag_rows(*norms, d=None):
    d = d or len(norms)
    A = np.zeros((len(norms), d))
    A[np.arange(len(norms)), np.arange(len(norms))] = norms
    return A


class TestDenseShrink:
    def test_orthogonal_rows(self):
        B = dense_shrink(diag_rows(3.0, 2.0, 1.0), 2)
        expected = np.zeros((2, 3))
        expected[0, 0] = np.sqrt(5.0)
        np.testing.assert_allclose(np.abs(B), expected, atol=1e-12)

    def test_rank_below_ell_is_exact(self):
        A = np.array([[1.0, 0, 0], [1.0, 0, 0]])
        B = dense_shrink(A, 2)
        np.testing.assert_allclose(np.abs(B[0]), [np.sqrt(2), 0, 0], atol=1e-12)
        assert not np.any(B[1])
        np.testing.assert_allclose(B.T @ B, A.T @ A, atol=1e-12)

    def test_frobenius_bookkeeping(self):
        A = make_rng(8).standard_normal((8, 5))
        s = lapack_singular_values(A)
        B = dense_shrink(A, 4)
        drop = np.sum(A * A) - np.sum(B * B)
        expected = 4 * s[3] ** 2 + s[4] ** 2
        assert abs(drop - expected) <= 1e-8 * expected

    def test_last_row_zero(self):
        B = dense_shrink(make_rng(1).standard_normal((6, 9)), 4)
        assert B.shape == (4, 9)
        assert not np.any(B[3])

    def test_ell_too_large(self):
        with pytest.raises(ValueError):
            dense_shrink(np.ones((2, 5)), 3)

    @pytest.mark.parametrize("seed", range(20))
    def test_psd_dominance(self, seed):
        A = random_sparse(12, 15, 0.5, seed)
        B = dense_shrink(A, 5)
        assert min_eig(A.T @ A - B.T @ B) >= -1e-8 * np.sum(A * A)


class TestSparseShrink:
    def test_rank_one_exact(self):
        A = np.array([[2.0, 0, 0], [1.0, 0, 0]])
        B = sparse_shrink(SparseBuffer.from_dense(A), 2, PowerConfig(), make_rng(0))
        expected = np.zeros((3, 3))
        expected[0, 0] = 5.0
        np.testing.assert_allclose(B.T @ B, expected, atol=1e-8)

    @pytest.mark.parametrize("seed", range(20))
    def test_psd_dominance(self, seed):
        A = random_sparse(40, 30, 0.2, seed)
        B = sparse_shrink(SparseBuffer.from_dense(A), 6, PowerConfig(), make_rng(seed))
        assert not np.any(B[5])
        assert min_eig(A.T @ A - B.T @ B) >= -1e-8 * np.sum(A * A)

    def test_frobenius_drop_mostly_large(self):
        hits = 0
        for seed in range(50):
            A = random_sparse(100, 60, 0.1, 500 + seed)
            s = lapack_singular_values(A)
            B = sparse_shrink(SparseBuffer.from_dense(A), 8, PowerConfig(), make_rng(seed))
            hits += np.sum(A * A) - np.sum(B * B) >= 0.75 * 8 * s[7] ** 2
        assert hits >= 45

    def test_requires_enough_rows(self):
        with pytest.raises(ValueError):
            sparse_shrink(SparseBuffer.from_dense(np.eye(2, 4)), 3, PowerConfig(), make_rng(0))


class TestVerifySpectral:
    def test_zero_operator(self):
        assert verify_spectral(lambda x: 0 * x, 10, VerifierState(), make_rng(0))

    def test_identity(self):
        assert verify_spectral(lambda x: x, 10, VerifierState(), make_rng(0))

    def test_three_identity(self):
        assert not verify_spectral(lambda x: 3 * x, 10, VerifierState(), make_rng(0))

    def test_counter_and_budget(self):
        state = VerifierState(delta=0.2)
        rng = make_rng(0)
        for _ in range(5):
            verify_spectral(lambda x: x, 4, state, rng)
        assert state.i == 5
        np.testing.assert_allclose(state.budgets, [0.2 / (2 * i * i) for i in range(1, 6)])
        assert state.spent < state.delta

    def test_step_count(self):
        state = VerifierState(delta=0.1)
        assert state.steps(64, 0.05) == math.ceil(2 * math.log2(64 / 0.05))

    def test_projection_with_unit_norm_accepted(self):
        rng = make_rng(3)
        Q, _ = np.linalg.qr(rng.standard_normal((20, 5)))
        P = Q @ Q.T
        state = VerifierState()
        assert all(verify_spectral(lambda x: P @ x, 20, state, rng) for _ in range(200))

    def test_non_finite(self):
        with pytest.raises(NumericalError):
            verify_spectral(lambda x: x * np.nan, 3, VerifierState(), make_rng(0))

    def test_bad_state(self):
        with pytest.raises(ValueError):
            VerifierState(delta=1.5)


class TestBoosted:
    def test_delta_arithmetic(self):
        assert shrink_delta(41.0, 35.0, 5) == pytest.approx(8.2, rel=1e-15)

    def test_rank_deficient_exact_branch(self):
        A = np.zeros((6, 10))
        A[:, :2] = make_rng(0).standard_normal((6, 2))
        state = VerifierState()
        rep = boosted_sparse_shrink(SparseBuffer.from_dense(A), 4, state, PowerConfig(), make_rng(1))
        assert rep.exact and rep.attempts == 1
        assert state.i == 0
        np.testing.assert_allclose(rep.sketch.T @ rep.sketch, A.T @ A, atol=1e-8 * np.sum(A * A))

    @pytest.mark.parametrize("seed", range(20))
    def test_accepted_runs_meet_delta(self, seed):
        A = random_sparse(200, 80, 0.05, 900 + seed)
        state = VerifierState()
        rep = boosted_sparse_shrink(SparseBuffer.from_dense(A), 10, state, PowerConfig(), make_rng(seed))
        B = rep.sketch
        assert spectral_norm_dense(A.T @ A - B.T @ B) <= rep.delta_hat
        assert rep.delta_hat >= 0
        assert state.spent < state.delta

    def test_retry_cap(self, monkeypatch):
        monkeypatch.setattr("sparse_fd.shrink.verify_spectral", lambda *a, **k: False)
        A = random_sparse(30, 20, 0.3, 1)
        with pytest.raises(RetryLimitExceeded):
            boosted_sparse_shrink(SparseBuffer.from_dense(A), 5, VerifierState(), PowerConfig(),
                                  make_rng(0), max_attempts=3)

    def test_difference_operator_matches_dense(self):
        A = random_sparse(15, 8, 0.4, 2)
        B = make_rng(0).standard_normal((3, 8))
        x = make_rng(1).standard_normal(8)
        op = difference_operator(SparseBuffer.from_dense(A), B, scale=0.5)
        np.testing.assert_allclose(op(x), 0.5 * (A.T @ A - B.T @ B) @ x, atol=1e-12)
