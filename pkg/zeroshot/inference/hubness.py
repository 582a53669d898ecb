"""
Hubness diagnostic: skewness of the prototype k-occurrence distribution.
"""
from __future__ import annotations

import numpy as np
from scipy import stats

from ..error_handler import ParameterError


def k_occurrence(effective: np.ndarray, k: int = 1) -> np.ndarray:
    """How often each prototype (column) is among an instance's k nearest."""
    effective = np.atleast_2d(np.asarray(effective, dtype=np.float64))
    n_classes = effective.shape[1]
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    k = min(k, n_classes)
    nearest = np.argsort(effective, axis=1, kind="stable")[:, :k]
    return np.bincount(nearest.ravel(), minlength=n_classes)


def hubness_skewness(effective: np.ndarray, k: int = 1) -> float:
    """Skewness of the k-occurrence counts; 0 when every prototype is hit equally often."""
    counts = k_occurrence(effective, k)
    if counts.size < 2 or np.all(counts == counts[0]):
        return 0.0
    return float(stats.skew(counts))
