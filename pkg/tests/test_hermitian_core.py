# File: tests/test_hermitian_core.py

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import DimensionError, NotHermitianError, ValidationError
from src.hermitian_core import (
    devectorize,
    eig_hermitian,
    gram_matrix,
    hermitian_basis,
    hs_inner,
    is_hermitian,
    random_hermitian,
    random_matrix,
    schatten_norm,
    vectorize,
)


class TestVectorization:
    def test_column_stacking_convention(self):
        """vec(|i><j|) lands at index j*d + i."""
        d = 3
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d))
                E[i, j] = 1.0
                v = vectorize(E)
                assert v[j * d + i] == 1.0
                assert np.count_nonzero(v) == 1

    def test_inverse(self, rng):
        A = random_matrix(4, rng)
        assert_allclose(devectorize(vectorize(A), 4), A)

    def test_hs_inner_matches_vdot_of_vectors(self, rng):
        A, B = random_matrix(3, rng), random_matrix(3, rng)
        assert_allclose(hs_inner(A, B), np.vdot(vectorize(A), vectorize(B)))
        assert_allclose(hs_inner(A, B), np.trace(A.conj().T @ B))

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionError):
            vectorize(np.zeros((2, 3)))
        with pytest.raises(DimensionError):
            devectorize(np.zeros(5), 2)


class TestSchattenNorms:
    def test_known_values(self):
        A = np.diag([3.0, -4.0])
        assert schatten_norm(A, 1) == pytest.approx(7.0)
        assert schatten_norm(A, 2) == pytest.approx(5.0)
        assert schatten_norm(A, np.inf) == pytest.approx(4.0)
        assert schatten_norm(A, 'inf') == pytest.approx(4.0)

    def test_norm_ordering(self, rng):
        A = random_matrix(5, rng)
        assert schatten_norm(A, np.inf) <= schatten_norm(A, 2) <= schatten_norm(A, 1)

    def test_norm_chain_on_random_matrices(self, rng):
        for _ in range(100):
            d = int(rng.integers(2, 7))
            A = random_matrix(d, rng)
            hs, one, op = schatten_norm(A, 2), schatten_norm(A, 1), schatten_norm(A, np.inf)
            assert hs <= one * (1 + 1e-9)
            assert one <= np.sqrt(d) * hs * (1 + 1e-9)
            assert hs ** 2 <= op * one * (1 + 1e-9)

    def test_unsupported_index(self):
        with pytest.raises(ValidationError):
            schatten_norm(np.eye(2), 3)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            schatten_norm(np.array([[np.nan, 0], [0, 1]]), 1)


class TestEigHermitian:
    def test_reconstructs_and_sorts(self, rng):
        H = random_hermitian(4, rng)
        values, vectors = eig_hermitian(H)
        assert np.all(np.diff(values) >= 0)
        assert_allclose(vectors @ np.diag(values) @ vectors.conj().T, H, atol=1e-10)
        assert np.linalg.norm(vectors.conj().T @ vectors - np.eye(4)) <= 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            eig_hermitian(np.array([[0, 1], [0, 0]]))

    def test_tolerance_is_relative(self):
        H = np.diag([1.0, 2.0]).astype(complex)
        H[0, 1] = 1e-13
        assert is_hermitian(H)


class TestHermitianBasis:
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_orthonormal_and_hermitian(self, d):
        basis = hermitian_basis(d)
        assert basis.shape == (d * d, d, d)
        assert_allclose(gram_matrix(basis), np.eye(d * d), atol=1e-12)
        for B in basis:
            assert is_hermitian(B)

    def test_identity_last_others_traceless(self):
        basis = hermitian_basis(4)
        assert_allclose(basis[-1], np.eye(4) / 2.0)
        assert_allclose(np.trace(basis[:-1], axis1=1, axis2=2), 0.0, atol=1e-12)

    def test_rejects_zero_dimension(self):
        with pytest.raises(DimensionError):
            hermitian_basis(0)
