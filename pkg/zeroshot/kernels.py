"""
Linear kernel shared by graph construction and regression.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .error_handler import ParameterError


def linear_kernel(X_a: np.ndarray, X_b: Optional[np.ndarray] = None) -> np.ndarray:
    """k(x_i, x_j) = x_i . x_j for every row pair; X_b defaults to X_a."""
    X_a = np.atleast_2d(np.asarray(X_a, dtype=np.float64))
    X_b = X_a if X_b is None else np.atleast_2d(np.asarray(X_b, dtype=np.float64))
    if X_a.shape[1] != X_b.shape[1]:
        raise ParameterError(
            f"kernel inputs disagree on feature dimension: {X_a.shape[1]} vs {X_b.shape[1]}"
        )
    return X_a @ X_b.T


def squared_distances_from_kernel(K: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances implied by a square Gram matrix."""
    diag = np.diag(K)
    return np.maximum(diag[:, None] + diag[None, :] - 2.0 * K, 0.0)
