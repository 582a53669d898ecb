"""
Class-name affinities in the embedding space and their agreement with transfer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import stats
from scipy.spatial.distance import cdist

from ..error_handler import MetricError, ParameterError
from .transfer import TransferCorrelationMatrix

AFFINITY_OPS = ("max", "mean", "min")


def affinity_matrix(Z: np.ndarray) -> np.ndarray:
    """1 - ||g(y_i) - g(y_j)|| for every ordered pair of class columns."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    return 1.0 - cdist(Z.T, Z.T)


def percentile_rank_affinity(affinity: np.ndarray) -> np.ndarray:
    """Percentile rank in [0, 1] of each off-diagonal affinity among all ordered pairs."""
    n = affinity.shape[0]
    off = ~np.eye(n, dtype=bool)
    ranks = np.ones_like(affinity)
    values = affinity[off]
    if values.size > 1:
        ranks[off] = (stats.rankdata(values, method="average") - 1.0) / (values.size - 1)
    return ranks


@dataclass(frozen=True)
class ClassnameAffinity:
    """R_max / R_mean / R_min of each candidate class against a test set."""
    candidates: tuple
    r_max: np.ndarray = field(repr=False)
    r_mean: np.ndarray = field(repr=False)
    r_min: np.ndarray = field(repr=False)

    def by_op(self, op: str) -> np.ndarray:
        if op not in AFFINITY_OPS:
            raise ParameterError(f"affinity op must be one of {list(AFFINITY_OPS)}, got {op!r}")
        return {"max": self.r_max, "mean": self.r_mean, "min": self.r_min}[op]


def classname_affinity(Z: np.ndarray, candidates: Sequence[int],
                       test_classes: Sequence[int]) -> ClassnameAffinity:
    """Aggregate affinities from each candidate class to every test class."""
    if len(test_classes) == 0:
        raise ParameterError("classname affinity needs a non-empty test set")
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    block = 1.0 - cdist(Z[:, list(candidates)].T, Z[:, list(test_classes)].T)
    return ClassnameAffinity(
        candidates=tuple(int(c) for c in candidates),
        r_max=block.max(axis=1),
        r_mean=block.mean(axis=1),
        r_min=block.min(axis=1),
    )


@dataclass(frozen=True)
class AffinityReport:
    class_names: tuple
    affinity: np.ndarray = field(repr=False)
    percentile: np.ndarray = field(repr=False)

    def frames(self) -> tuple[pd.DataFrame, pd.DataFrame]:
        names = list(self.class_names)
        return (pd.DataFrame(self.affinity, index=names, columns=names),
                pd.DataFrame(self.percentile, index=names, columns=names))


def affinity_report(Z: np.ndarray, class_names: Sequence[str]) -> AffinityReport:
    affinity = affinity_matrix(Z)
    return AffinityReport(class_names=tuple(class_names), affinity=affinity,
                          percentile=percentile_rank_affinity(affinity))


@dataclass(frozen=True)
class AffinityAgreement:
    coefficient: float
    n_pairs: int
    bin_edges: np.ndarray = field(repr=False)
    bin_means: np.ndarray = field(repr=False)
    bin_counts: np.ndarray = field(repr=False)


def correlation_affinity_agreement(
    correlation: TransferCorrelationMatrix,
    affinity: np.ndarray,
    n_bins: int = 10,
) -> AffinityAgreement:
    """Pearson correlation between valid transfer correlations and pair affinities,
    plus the mean transfer correlation per affinity bin."""
    corr_values = correlation.values[correlation.valid]
    aff_values = np.asarray(affinity)[correlation.valid]
    if corr_values.size < 3:
        raise MetricError(f"agreement needs >= 3 valid pairs, got {corr_values.size}")
    if np.all(corr_values == corr_values[0]) or np.all(aff_values == aff_values[0]):
        raise MetricError("agreement undefined: constant correlations or affinities")
    coefficient = float(stats.pearsonr(aff_values, corr_values)[0])

    edges = np.linspace(aff_values.min(), aff_values.max(), n_bins + 1)
    which = np.clip(np.digitize(aff_values, edges[1:-1]), 0, n_bins - 1)
    counts = np.bincount(which, minlength=n_bins)
    sums = np.bincount(which, weights=corr_values, minlength=n_bins)
    means = np.full(n_bins, np.nan)
    means[counts > 0] = sums[counts > 0] / counts[counts > 0]
    return AffinityAgreement(coefficient=coefficient, n_pairs=int(corr_values.size),
                             bin_edges=edges, bin_means=means, bin_counts=counts)
