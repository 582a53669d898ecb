"""
Matcher types and prediction structures.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from ..error_handler import ParameterError


class Matcher(Enum):
    """Ways to turn distances into class decisions."""
    NN = "nn"
    NRM = "nrm"
    GC = "gc"


@dataclass(frozen=True)
class DistanceMatrix:
    """d_ij between projected test instance i and prototype j (n_u x C_te)."""
    values: np.ndarray = field(repr=False)
    instance_ids: Tuple[int, ...]
    class_ids: Tuple[int, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ParameterError(f"distance matrix must be 2-D, got shape {values.shape}")
        if values.shape != (len(self.instance_ids), len(self.class_ids)):
            raise ParameterError(
                f"distance matrix shape {values.shape} does not match "
                f"{len(self.instance_ids)} instances x {len(self.class_ids)} classes"
            )
        if np.any(np.isnan(values)):
            raise ParameterError("distance matrix contains NaN")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "instance_ids", tuple(int(i) for i in self.instance_ids))
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_classes(self) -> int:
        return self.values.shape[1]

    def retrieval_scores(self) -> np.ndarray:
        """Negated raw distances; higher means more relevant."""
        return -self.values


@dataclass(frozen=True)
class Prediction:
    """Per-instance class decisions of one matcher."""
    predicted: np.ndarray = field(repr=False)   # class ids
    columns: np.ndarray = field(repr=False)     # chosen column per instance
    scores: np.ndarray = field(repr=False)      # n_u x C_te, negated effective distance
    matcher: Matcher
    self_trained: bool
    instance_ids: Tuple[int, ...]
    class_ids: Tuple[int, ...]

    @property
    def predicted_scores(self) -> np.ndarray:
        """Score of the chosen class for every instance."""
        return self.scores[np.arange(self.scores.shape[0]), self.columns]


def decide(effective: np.ndarray, distances: DistanceMatrix, matcher: Matcher,
           self_trained: bool) -> Prediction:
    """Argmin per row; np.argmin keeps the first column, i.e. the lowest class index."""
    columns = np.argmin(effective, axis=1)
    class_ids = np.asarray(distances.class_ids, dtype=np.int64)
    return Prediction(
        predicted=class_ids[columns],
        columns=columns,
        scores=-np.asarray(effective, dtype=np.float64),
        matcher=matcher,
        self_trained=self_trained,
        instance_ids=distances.instance_ids,
        class_ids=distances.class_ids,
    )
