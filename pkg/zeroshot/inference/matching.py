"""
Prototype matching: nearest neighbour, distance normalization (NRM) and
rank-based global correction (GC).
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from scipy.spatial.distance import cdist

from ..error_handler import ParameterError
from .base import DistanceMatrix, Matcher, Prediction, decide

logger = structlog.get_logger(__name__)


def distance_matrix(
    projections: np.ndarray,
    prototypes: np.ndarray,
    instance_ids: Optional[Sequence[int]] = None,
    class_ids: Optional[Sequence[int]] = None,
) -> DistanceMatrix:
    """Euclidean distances between projection columns (d x n_u) and prototype columns (d x C)."""
    projections = np.atleast_2d(np.asarray(projections, dtype=np.float64))
    prototypes = np.atleast_2d(np.asarray(prototypes, dtype=np.float64))
    if prototypes.shape[1] == 0:
        raise ParameterError("no prototypes to match against")
    if projections.shape[0] != prototypes.shape[0]:
        raise ParameterError(
            f"projections have d={projections.shape[0]}, prototypes have d={prototypes.shape[0]}"
        )
    n_u, n_c = projections.shape[1], prototypes.shape[1]
    values = cdist(projections.T, prototypes.T) if n_u else np.empty((0, n_c))
    return DistanceMatrix(
        values=values,
        instance_ids=tuple(range(n_u)) if instance_ids is None else tuple(instance_ids),
        class_ids=tuple(range(n_c)) if class_ids is None else tuple(class_ids),
    )


def nn_from_distances(distances: DistanceMatrix, self_trained: bool = False) -> Prediction:
    return decide(distances.values, distances, Matcher.NN, self_trained)


def nn_predict(
    projections: np.ndarray,
    prototypes: np.ndarray,
    class_ids: Optional[Sequence[int]] = None,
    self_trained: bool = False,
) -> Prediction:
    """Assign each projected instance to its nearest prototype."""
    return nn_from_distances(distance_matrix(projections, prototypes, class_ids=class_ids),
                             self_trained)


def nrm_predict(distances: DistanceMatrix, self_trained: bool = False) -> Prediction:
    """Scale each prototype's column by 1/sqrt(sum_i d_ij^2), then match by nearest neighbour."""
    if distances.n_instances < 1:
        raise ParameterError("NRM needs at least one test instance")
    norms = np.sqrt(np.sum(distances.values**2, axis=0))
    zero = norms == 0
    if np.any(zero):
        logger.warning("nrm_zero_column", class_ids=[distances.class_ids[j] for j in np.flatnonzero(zero)])
    normalized = distances.values / np.where(zero, 1.0, norms)
    return decide(normalized, distances, Matcher.NRM, self_trained)


def gc_ranks(distances: DistanceMatrix) -> np.ndarray:
    """Rank(y, x_i) = #{j != i : d_jy <= d_iy} for every instance and prototype."""
    values = distances.values
    ranks = np.empty(values.shape, dtype=np.int64)
    for j in range(values.shape[1]):
        column = np.sort(values[:, j])
        ranks[:, j] = np.searchsorted(column, values[:, j], side="right") - 1
    return ranks


def gc_predict(distances: DistanceMatrix, self_trained: bool = False) -> Prediction:
    """Match each instance to the prototype under which it ranks best."""
    if distances.n_instances < 2:
        raise ParameterError("GC needs at least two test instances")
    return decide(gc_ranks(distances).astype(np.float64), distances, Matcher.GC, self_trained)


def write_predictions(prediction: Prediction, path: str | Path) -> None:
    """CSV ``instance_id,predicted_class,score``."""
    frame = pd.DataFrame({
        "instance_id": np.asarray(prediction.instance_ids, dtype=np.int64),
        "predicted_class": prediction.predicted,
        "score": prediction.predicted_scores,
    })
    frame.to_csv(path, index=False, float_format="%.17g")
