import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from switchid.errors import InvalidInputError
from switchid.linalg import (
    jacobi_svd,
    min_singular_value,
    pseudoinverse,
    singular_values,
    spectral_norm,
    spectral_radius,
)


def square_matrices(n_min=2, n_max=4, scale=5.0):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(
            st.floats(-scale, scale, allow_nan=False, width=64), min_size=n * n, max_size=n * n
        ).map(lambda vals: np.array(vals).reshape(n, n))
    )


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(2)) == pytest.approx(1.0)

    def test_diagonal_is_max_abs_entry(self):
        assert spectral_norm(np.diag([0.5, 2.0])) == pytest.approx(2.0)

    def test_nilpotent_shift(self):
        # A^T A = diag(0, 1), so the singular values are {1, 0}.
        assert spectral_norm([[0.0, 1.0], [0.0, 0.0]]) == pytest.approx(1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            spectral_norm([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(InvalidInputError):
            spectral_norm([[np.inf, 0.0], [0.0, 1.0]])


class TestMinSingularValue:
    def test_identity(self):
        assert min_singular_value(np.eye(3)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert min_singular_value(np.diag([0.5, 2.0])) == pytest.approx(0.5)

    def test_rank_one(self):
        assert min_singular_value([[1.0, 1.0], [1.0, 1.0]]) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            min_singular_value(np.ones((2, 3)))


class TestSpectralRadius:
    def test_contracting_mode(self):
        assert spectral_radius(np.diag([0.5, 0.5])) == pytest.approx(0.5)

    def test_expanding_mode(self):
        assert spectral_radius(np.diag([2.0, 2.0])) == pytest.approx(2.0)

    def test_nilpotent(self):
        assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]) == pytest.approx(0.0)

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            spectral_radius(np.ones((2, 3)))


class TestPseudoinverse:
    def test_identity(self):
        assert np.allclose(pseudoinverse(np.eye(2)), np.eye(2))

    def test_zero_matrix(self):
        assert np.allclose(pseudoinverse(np.zeros((2, 2))), np.zeros((2, 2)))

    def test_singular_diagonal(self):
        assert np.allclose(pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_rejects_negative_tol(self):
        with pytest.raises(InvalidInputError):
            pseudoinverse(np.eye(2), tol=-1.0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(2, 4),
        st.lists(st.one_of(st.just(0.0), st.floats(0.1, 10.0)), min_size=4, max_size=4),
        st.integers(0, 2**32 - 1),
    )
    def test_moore_penrose_identities(self, n, sigmas, seed):
        # Built from a known SVD with singular values either 0 or >= 0.1, so
        # the default cutoff retains exactly the nonzero ones and the
        # identities hold globally.
        rng = np.random.default_rng(seed)
        u = np.linalg.qr(rng.normal(size=(n, n)))[0]
        v = np.linalg.qr(rng.normal(size=(n, n)))[0]
        a = (u * np.array(sigmas[:n])) @ v.T
        p = pseudoinverse(a)
        scale = max(1.0, spectral_norm(a))
        assert np.allclose(a @ p @ a, a, atol=1e-8 * scale)
        assert np.allclose(p @ a @ p, p, atol=1e-8 * max(1.0, spectral_norm(p)))
        assert np.allclose((a @ p).T, a @ p, atol=1e-8)
        assert np.allclose((p @ a).T, p @ a, atol=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(square_matrices())
    def test_full_rank_square_matches_inverse(self, a):
        if min_singular_value(a) < 1e-3:
            return
        assert np.allclose(pseudoinverse(a), np.linalg.inv(a), atol=1e-8 * spectral_norm(np.linalg.inv(a)))


class TestOrderInvariants:
    @settings(max_examples=100, deadline=None)
    @given(square_matrices())
    def test_norm_dominates_min_singular_value(self, a):
        assert spectral_norm(a) >= min_singular_value(a) - 1e-12

    @settings(max_examples=100, deadline=None)
    @given(square_matrices())
    def test_norm_dominates_spectral_radius(self, a):
        assert spectral_radius(a) <= spectral_norm(a) + 1e-9 * max(1.0, spectral_norm(a))

    @settings(max_examples=100, deadline=None)
    @given(square_matrices(), st.randoms(use_true_random=False))
    def test_submultiplicative(self, a, rnd):
        b = np.array([[rnd.uniform(-5, 5) for _ in range(a.shape[0])] for _ in range(a.shape[0])])
        lhs = spectral_norm(a @ b)
        rhs = spectral_norm(a) * spectral_norm(b)
        assert lhs <= rhs * (1.0 + 1e-10) + 1e-12


class TestAgainstNumpy:
    """numpy's LAPACK SVD is the independent oracle for the Jacobi sweep."""

    def test_random_rectangular(self):
        rng = np.random.default_rng(42)
        for _ in range(150):
            m, n = rng.integers(1, 9, size=2)
            a = rng.normal(size=(m, n)) * 10.0 ** rng.integers(-3, 4)
            u, s, vt = jacobi_svd(a)
            assert np.allclose((u * s) @ vt, a, atol=1e-11 * max(1.0, np.abs(a).max()))
            expected = np.linalg.svd(a, compute_uv=False)
            assert np.allclose(s, expected, rtol=1e-10, atol=1e-12 * max(1.0, expected[0]))

    def test_relative_accuracy_on_graded_matrix(self):
        a = np.diag([1e6, 1.0, 1e-6]) @ np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))[0]
        s = singular_values(a)
        expected = np.linalg.svd(a, compute_uv=False)
        assert np.all(np.abs(s - expected) <= 1e-10 * expected)
