# File: src/hermitian_core.py
"""
Complex-matrix helpers used by every other module: column-stacking
vectorization, Schatten norms, Hermitian eigendecomposition and a
Hermitian orthonormal basis for any dimension.

Matrices are plain ``numpy`` arrays of dtype complex128.
"""

import numpy as np
import scipy.linalg

from .config import HERMITIAN_TOL
from .errors import DimensionError, NotHermitianError, ValidationError


def as_matrix(A) -> np.ndarray:
    """Coerces ``A`` to a finite complex 2-D array."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionError(f"Expected a matrix, got an array with shape {M.shape}.")
    if not np.all(np.isfinite(M)):
        raise ValidationError("Matrix has non-finite entries.")
    return M


def as_square(A) -> np.ndarray:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {M.shape}.")
    return M


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def vectorize(A) -> np.ndarray:
    """
    Column-stacking vectorization, vec(|i><j|) = e_{j*d + i}.
    Args:
        A: Square matrix of dimension d.
    Returns:
        np.ndarray: Complex vector of length d**2.
    """
    M = as_square(A)
    return M.reshape(-1, order='F')


def devectorize(v, d: int) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(v, dtype=np.complex128).reshape(-1)
    if vec.size != d * d:
        raise DimensionError(f"Vector of length {vec.size} cannot be reshaped to {d}x{d}.")
    return vec.reshape((d, d), order='F')


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product Tr[A^dagger B]."""
    return complex(np.vdot(np.asarray(A), np.asarray(B)))


def schatten_norm(A, p) -> float:
    """
    Schatten p-norm for p in {1, 2, inf}.
    Args:
        A: Any finite matrix.
        p: 1, 2 or ``np.inf`` (the string 'inf' is accepted too).
    Returns:
        float: The l_p norm of the singular values.
    """
    M = as_matrix(A)
    if p in ('inf', 'fro'):
        p = np.inf if p == 'inf' else 2
    if p == 2:
        return float(np.linalg.norm(M, 'fro'))
    singular_values = np.linalg.svd(M, compute_uv=False)
    if p == 1:
        return float(np.sum(singular_values))
    if p == np.inf:
        return float(singular_values[0]) if singular_values.size else 0.0
    raise ValidationError(f"Unsupported Schatten index p={p}; use 1, 2 or inf.")


def hermiticity_residual(A) -> float:
    M = as_square(A)
    return float(np.linalg.norm(M - dagger(M), 'fro'))


def is_hermitian(A, tol: float = HERMITIAN_TOL) -> bool:
    M = as_square(A)
    return hermiticity_residual(M) <= tol * max(1.0, float(np.linalg.norm(M, 'fro')))


def hermitian_part(A) -> np.ndarray:
    M = as_square(A)
    return 0.5 * (M + dagger(M))


def eig_hermitian(A, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian matrix.
    Args:
        A: Hermitian matrix (within ``tol``, relative to max(1, ||A||_HS)).
    Returns:
        tuple: (eigenvalues ascending, eigenvectors as orthonormal columns).
    """
    M = as_square(A)
    if not is_hermitian(M, tol):
        raise NotHermitianError(
            f"Matrix is not Hermitian: ||A - A^dagger||_HS = {hermiticity_residual(M):.3e}."
        )
    eigenvalues, eigenvectors = scipy.linalg.eigh(hermitian_part(M))
    # ties keep the solver's index order
    order = np.argsort(eigenvalues, kind='stable')
    return eigenvalues[order], eigenvectors[:, order]


def min_eigenvalue(A) -> float:
    return float(eig_hermitian(A)[0][0])


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE-style Hermitian matrix, used as a probe."""
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (G + dagger(G))


def random_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def hermitian_basis(d: int) -> np.ndarray:
    """
    Normalized generalized Gell-Mann basis of the Hermitian d x d matrices.

    The first d**2 - 1 elements are traceless (symmetric off-diagonal,
    antisymmetric off-diagonal, then diagonal), and the last one is I/sqrt(d).
    Every element has unit Hilbert-Schmidt norm.
    Args:
        d (int): Dimension, at least 1.
    Returns:
        np.ndarray: Array of shape (d**2, d, d).
    """
    if d < 1:
        raise DimensionError(f"Dimension must be positive, got {d}.")
    basis = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), dtype=np.complex128)
            S[j, k] = S[k, j] = inv_sqrt2
            basis.append(S)
    for j in range(d):
        for k in range(j + 1, d):
            A = np.zeros((d, d), dtype=np.complex128)
            A[j, k] = -1j * inv_sqrt2
            A[k, j] = 1j * inv_sqrt2
            basis.append(A)
    for level in range(1, d):
        D = np.zeros((d, d), dtype=np.complex128)
        D[np.arange(level), np.arange(level)] = 1.0
        D[level, level] = -float(level)
        basis.append(D / np.sqrt(level * (level + 1)))
    basis.append(np.eye(d, dtype=np.complex128) / np.sqrt(d))
    return np.array(basis)


def gram_matrix(vectors: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix of a stack of matrices."""
    flat = vectors.reshape(vectors.shape[0], -1)
    return np.conj(flat) @ flat.T
