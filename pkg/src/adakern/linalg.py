"""Dense symmetric linear algebra used throughout the package.

Provides the eigendecomposition, the eigenvalue soft-thresholding operator
(the proximal map of the nuclear norm restricted to symmetric matrices),
and the four matrix norms the solvers rely on.
"""

from typing import NamedTuple

import numpy as np

from .errors import DataError, NumericalError, ParameterError

# Relative tolerance for accepting a matrix as symmetric.
SYMMETRY_RTOL = 1e-12


class EigenPair(NamedTuple):
    """Eigendecomposition with eigenvalues sorted non-increasing."""

    values: np.ndarray
    vectors: np.ndarray


class MatrixNorms(NamedTuple):
    frobenius: float
    spectral: float
    nuclear: float
    manhattan: float


def check_symmetric(A, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate that A is square and symmetric within ``rtol * max(1, ||A||_F)``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"expected a square matrix, got shape {A.shape}")
    if A.size:
        scale = max(1.0, float(np.linalg.norm(A)))
        skew = float(np.max(np.abs(A - A.T)))
        if skew > rtol * scale:
            raise DataError(
                f"matrix is not symmetric: max |A - A^T| = {skew:.3e} "
                f"exceeds tolerance {rtol * scale:.3e}"
            )
    return A


def sym_eig(A) -> EigenPair:
    """Eigendecomposition of a symmetric matrix.

    Returns eigenvalues in non-increasing order and the matching
    orthonormal eigenvectors as columns, so that ``A == V @ diag(w) @ V.T``
    up to round-off.  Rejects non-symmetric input.
    """
    A = check_symmetric(A)
    A = 0.5 * (A + A.T)
    try:
        values, vectors = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    # eigh returns ascending order; reverse for a non-increasing spectrum.
    return EigenPair(values[::-1].copy(), vectors[:, ::-1].copy())


def soft_threshold_spectrum(A, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue soft-thresholding, also returning the shrunk spectrum.

    Each eigenvalue w maps to sign(w) * max(0, |w| - threshold).  For PSD
    input the sum of the returned spectrum equals the nuclear norm of the
    result, which lets callers avoid a second factorization.
    """
    if threshold < 0:
        raise ParameterError(f"threshold must be nonnegative, got {threshold}")
    values, vectors = sym_eig(A)
    shrunk = np.sign(values) * np.maximum(0.0, np.abs(values) - threshold)
    B = (vectors * shrunk) @ vectors.T
    return 0.5 * (B + B.T), shrunk


def soft_threshold(A, threshold: float) -> np.ndarray:
    """Proximal map of ``threshold * ||.||_*`` on symmetric matrices."""
    B, _ = soft_threshold_spectrum(A, threshold)
    return B


def matrix_norms(A) -> MatrixNorms:
    """Frobenius, spectral, nuclear and Manhattan (entry-wise l1) norms."""
    A = np.asarray(A, dtype=float)
    singulars = np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0)
    return MatrixNorms(
        frobenius=float(np.sqrt((A * A).sum())),
        spectral=float(singulars[0]) if singulars.size else 0.0,
        nuclear=float(singulars.sum()),
        manhattan=float(np.abs(A).sum()),
    )
