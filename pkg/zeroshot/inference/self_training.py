"""
Self-training: move each test prototype to the mean of its nearest projections.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import structlog
from scipy.spatial.distance import cdist

from ..error_handler import ParameterError

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class AdaptedPrototypes:
    original: np.ndarray = field(repr=False)
    adapted: np.ndarray = field(repr=False)
    k: int


def self_train(
    prototypes: np.ndarray,
    projections: np.ndarray,
    k: int,
    renormalize: bool = True,
) -> AdaptedPrototypes:
    """Replace every prototype by the mean of its k nearest projected test instances.

    Neighbours are searched from the prototype's side; k is clamped to the number
    of projections. Selected columns are averaged in index order.
    """
    prototypes = np.atleast_2d(np.asarray(prototypes, dtype=np.float64))
    projections = np.atleast_2d(np.asarray(projections, dtype=np.float64))
    n_u = projections.shape[1]
    if n_u == 0:
        raise ParameterError("self-training needs at least one projected test instance")
    if k < 1:
        raise ParameterError(f"self-training k must be >= 1, got {k}")
    if k > n_u:
        logger.warning("self_train_k_clamped", requested=k, available=n_u)
        k = n_u

    distances = cdist(prototypes.T, projections.T)
    adapted = np.empty_like(prototypes)
    for c in range(prototypes.shape[1]):
        nearest = np.sort(np.argsort(distances[c], kind="stable")[:k])
        mean = projections[:, nearest].mean(axis=1)
        if renormalize:
            norm = np.linalg.norm(mean)
            if norm == 0:
                logger.warning("self_train_zero_mean", prototype=c)
            else:
                mean = mean / norm
        adapted[:, c] = mean
    return AdaptedPrototypes(original=prototypes, adapted=adapted, k=k)
