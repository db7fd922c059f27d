"""Gaussian Gram matrices for training and train-by-test evaluation."""

import numpy as np

from .errors import DataError, ParameterError


def pairwise_sq_dists(A, B) -> np.ndarray:
    """Squared Euclidean distances between rows of A and rows of B.

    Uses the expanded form ||a||^2 + ||b||^2 - 2 a.b with negative
    round-off clamped to zero.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2:
        raise DataError("feature matrices must be 2-D")
    if A.shape[1] != B.shape[1]:
        raise DataError(
            f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}"
        )
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :]
    sq -= 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def _check_sigma(sigma: float) -> float:
    if not np.isfinite(sigma) or sigma <= 0:
        raise ParameterError(f"kernel width sigma must be positive, got {sigma}")
    return float(sigma)


def gaussian_gram(X, sigma: float) -> np.ndarray:
    """n x n Gaussian kernel matrix K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)).

    Unit diagonal, symmetric, PSD up to round-off; entries in (0, 1].
    """
    sigma = _check_sigma(sigma)
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite values")
    K = np.exp(-pairwise_sq_dists(X, X) / (2.0 * sigma * sigma))
    return 0.5 * (K + K.T)


def cross_gram(X_train, X_test, sigma: float) -> np.ndarray:
    """n x m kernel matrix between training rows and test rows."""
    sigma = _check_sigma(sigma)
    return np.exp(-pairwise_sq_dists(X_train, X_test) / (2.0 * sigma * sigma))
