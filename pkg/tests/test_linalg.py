"""Kernel tests: seeded Gaussian draws, QR conventions, SVD, solves, projectors."""

import numpy as np
import pytest

from streampca.errors import (
    DataError,
    DimensionError,
    RankDeficiencyError,
    SingularMatrixError,
)
from streampca.linalg import (
    dense_svd,
    gaussian_matrix,
    projector_apply,
    qr_unpivoted,
    sign_align,
    solve_rt,
)


class TestGaussianMatrix:
    def test_same_seed_bit_identical(self):
        a = gaussian_matrix(4, 3, seed=7)
        b = gaussian_matrix(4, 3, seed=7)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = gaussian_matrix(4, 3, seed=7)
        b = gaussian_matrix(4, 3, seed=8)
        assert not np.array_equal(a, b)

    def test_different_streams_differ(self):
        a = gaussian_matrix(4, 3, seed=7, stream=0)
        b = gaussian_matrix(4, 3, seed=7, stream=1)
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("seed", [1, 17, 12345])
    def test_moments(self, seed):
        # Law-of-large-numbers sanity: 10000 standard normal samples.
        x = gaussian_matrix(10000, 1, seed=seed)
        assert abs(x.mean()) < 0.05
        assert abs(x.var() - 1.0) < 0.1

    def test_zero_dimension_rejected(self):
        with pytest.raises(DimensionError):
            gaussian_matrix(0, 3, seed=1)
        with pytest.raises(DimensionError):
            gaussian_matrix(3, 0, seed=1)


class TestQrUnpivoted:
    def test_identity(self):
        f = qr_unpivoted(np.eye(3))
        assert np.allclose(f.q, np.eye(3))
        assert np.allclose(f.r, np.eye(3))

    def test_single_column(self):
        f = qr_unpivoted(np.array([[3.0], [4.0]]))
        assert np.allclose(f.q, [[0.6], [0.8]])
        assert np.allclose(f.r, [[5.0]])

    def test_nonnegative_diagonal_and_reconstruction(self):
        y = gaussian_matrix(40, 8, seed=3)
        f = qr_unpivoted(y)
        assert np.all(np.diag(f.r) >= 0.0)
        assert np.max(np.abs(f.q.T @ f.q - np.eye(8))) <= 1e-12
        assert np.linalg.norm(f.q @ f.r - y) <= 1e-12 * np.linalg.norm(y)
        # r strictly upper triangular below the diagonal
        assert np.allclose(np.tril(f.r, -1), 0.0)

    def test_proportional_columns_raise(self):
        x = gaussian_matrix(10, 1, seed=5)
        y = np.hstack([x, 2.0 * x])
        with pytest.raises(RankDeficiencyError) as exc:
            qr_unpivoted(y)
        assert exc.value.column == 1

    def test_rank_check_off_returns_orthonormal_q(self):
        x = gaussian_matrix(10, 1, seed=5)
        y = np.hstack([x, 2.0 * x])
        f = qr_unpivoted(y, rank_check=False)
        assert np.max(np.abs(f.q.T @ f.q - np.eye(2))) <= 1e-12

    def test_deterministic(self):
        y = gaussian_matrix(30, 6, seed=11)
        f1 = qr_unpivoted(y)
        f2 = qr_unpivoted(y)
        assert np.array_equal(f1.q, f2.q)
        assert np.array_equal(f1.r, f2.r)

    def test_wide_input_rejected(self):
        with pytest.raises(DimensionError):
            qr_unpivoted(np.ones((2, 5)))


class TestDenseSvd:
    def test_diagonal_embedded(self):
        b = np.zeros((3, 5))
        b[0, 0], b[1, 1], b[2, 2] = 3.0, 1.0, 2.0
        t = dense_svd(b)
        assert np.allclose(t.s, [3.0, 2.0, 1.0])

    def test_rank_one(self):
        x = gaussian_matrix(6, 1, seed=2).ravel()
        y = gaussian_matrix(9, 1, seed=3).ravel()
        t = dense_svd(np.outer(x, y))
        assert np.isclose(t.s[0], np.linalg.norm(x) * np.linalg.norm(y))
        assert np.all(t.s[1:] <= 1e-12 * t.s[0])

    def test_gram_matrix_oracle(self):
        # Independent oracle: singular values are the square roots of the
        # eigenvalues of B B^T from a symmetric eigensolver.
        b = gaussian_matrix(20, 200, seed=9)
        t = dense_svd(b)
        ev = np.linalg.eigvalsh(b @ b.T)[::-1]
        assert np.allclose(t.s, np.sqrt(np.maximum(ev, 0.0)), rtol=1e-9, atol=1e-9)

    def test_orthonormal_factors_and_reconstruction(self):
        b = gaussian_matrix(15, 40, seed=4)
        t = dense_svd(b)
        assert np.max(np.abs(t.u.T @ t.u - np.eye(15))) <= 1e-12
        assert np.max(np.abs(t.v.T @ t.v - np.eye(15))) <= 1e-12
        rec = t.u @ np.diag(t.s) @ t.v.T
        assert np.linalg.norm(rec - b) <= 1e-10 * np.linalg.norm(b)

    def test_descending(self):
        t = dense_svd(gaussian_matrix(10, 10, seed=6))
        assert np.all(np.diff(t.s) <= 0.0)
        assert np.all(t.s >= 0.0)

    def test_permutation_invariance(self):
        b = gaussian_matrix(12, 18, seed=8)
        t0 = dense_svd(b)
        rng = np.random.Generator(np.random.Philox(key=np.array([1, 0], dtype=np.uint64)))
        t1 = dense_svd(b[rng.permutation(12)][:, rng.permutation(18)])
        assert np.allclose(t0.s, t1.s, rtol=1e-10, atol=1e-10)

    def test_nonfinite_rejected(self):
        b = np.ones((2, 2))
        b[0, 1] = np.nan
        with pytest.raises(DataError):
            dense_svd(b)


class TestSolveRt:
    def test_identity(self):
        m = gaussian_matrix(4, 7, seed=1)
        assert np.allclose(solve_rt(np.eye(4), m), m)

    def test_scalar(self):
        out = solve_rt(np.array([[2.0]]), np.array([[4.0, 6.0]]))
        assert np.allclose(out, [[2.0, 3.0]])

    def test_residual(self):
        r = np.triu(gaussian_matrix(8, 8, seed=12)) + 8.0 * np.eye(8)
        m = gaussian_matrix(8, 5, seed=13)
        x = solve_rt(r, m)
        assert np.max(np.abs(r.T @ x - m)) <= 1e-12

    def test_singular_diagonal_raises(self):
        r = np.eye(3)
        r[1, 1] = 0.0
        with pytest.raises(SingularMatrixError):
            solve_rt(r, np.ones((3, 2)))


class TestProjectorApply:
    def test_axis_projection(self):
        q = np.array([[1.0], [0.0]])
        assert np.allclose(projector_apply(q, np.array([3.0, 4.0])), [3.0, 0.0])

    def test_identity_on_range(self):
        q = qr_unpivoted(gaussian_matrix(20, 5, seed=3)).q
        x = q @ gaussian_matrix(5, 1, seed=4).ravel()
        assert np.max(np.abs(projector_apply(q, x) - x)) <= 1e-12

    def test_idempotent(self):
        q = qr_unpivoted(gaussian_matrix(30, 6, seed=5)).q
        x = gaussian_matrix(30, 1, seed=6).ravel()
        once = projector_apply(q, x)
        assert np.max(np.abs(projector_apply(q, once) - once)) <= 1e-12

    def test_mismatch_raises(self):
        q = np.eye(3)[:, :2]
        with pytest.raises(DimensionError):
            projector_apply(q, np.ones(4))


class TestProjectorProperties:
    """Numerical checks of the four orthogonal projector identities."""

    def _case(self, i):
        rng = np.random.Generator(np.random.Philox(key=np.array([i, 99], dtype=np.uint64)))
        m = int(rng.integers(5, 51))
        b = int(rng.integers(1, min(m, 10) + 1))
        q = qr_unpivoted(rng.standard_normal((m, b))).q
        x = rng.standard_normal(m)
        y = rng.standard_normal(m)
        return q, x, y

    @pytest.mark.parametrize("i", range(20))
    def test_all_four(self, i):
        q, x, y = self._case(i)
        px = projector_apply(q, x)
        # symmetry of the implied matrix
        assert abs(np.dot(px, y) - np.dot(x, projector_apply(q, y))) <= 1e-12 * (
            1.0 + abs(np.dot(x, y))
        )
        # idempotence
        assert np.max(np.abs(projector_apply(q, px) - px)) <= 1e-12
        # complement orthogonal to the range
        assert np.max(np.abs(q.T @ (x - px))) <= 1e-12
        # identity on the basis columns
        assert np.max(np.abs(projector_apply(q, q) - q)) <= 1e-12


class TestSignAlign:
    def test_flips_pair_consistently(self):
        u = np.array([[1.0, 2.0], [0.5, -1.0]])
        v = np.array([[-3.0, 1.0], [1.0, 2.0]])
        u2, v2 = sign_align(u, v)
        assert v2[0, 0] == 3.0 and np.allclose(u2[:, 0], -u[:, 0])
        assert np.allclose(v2[:, 1], v[:, 1]) and np.allclose(u2[:, 1], u[:, 1])

    def test_inputs_untouched(self):
        u = np.array([[1.0], [1.0]])
        v = np.array([[-2.0], [1.0]])
        sign_align(u, v)
        assert v[0, 0] == -2.0
