"""
Classification and retrieval metrics.
"""
from __future__ import annotations

from typing import Dict, Sequence, Tuple

import numpy as np
import structlog
from sklearn.metrics import roc_auc_score

from ..error_handler import MetricError

logger = structlog.get_logger(__name__)


def _aligned(predictions: np.ndarray, truth: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise MetricError(f"{predictions.size} predictions for {truth.size} labels")
    if truth.size == 0:
        raise MetricError("cannot score an empty set")
    return predictions, truth


def accuracy(predictions: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of exact matches."""
    predictions, truth = _aligned(predictions, truth)
    return float(np.mean(predictions == truth))


def class_balanced_accuracy(predictions: np.ndarray, truth: np.ndarray) -> float:
    """Mean per-class recall over the classes present in truth."""
    predictions, truth = _aligned(predictions, truth)
    recalls = [np.mean(predictions[truth == c] == c) for c in np.unique(truth)]
    return float(np.mean(recalls))


def per_class_accuracy(predictions: np.ndarray, truth: np.ndarray) -> Dict[int, float]:
    predictions, truth = _aligned(predictions, truth)
    return {int(c): float(np.mean(predictions[truth == c] == c)) for c in np.unique(truth)}


def average_precision(scores: np.ndarray, relevance: np.ndarray) -> float:
    """Finite-sum AP: rank by descending score, ties by ascending instance index."""
    scores = np.asarray(scores, dtype=np.float64)
    relevance = np.asarray(relevance).astype(bool)
    if scores.shape != relevance.shape:
        raise MetricError(f"{scores.size} scores for {relevance.size} relevance flags")
    n_pos = int(relevance.sum())
    if n_pos == 0:
        raise MetricError("average precision needs at least one relevant instance")
    order = np.lexsort((np.arange(scores.size), -scores))
    ranked = relevance[order]
    precision_at = np.cumsum(ranked) / np.arange(1, ranked.size + 1)
    return float(np.sum(precision_at[ranked]) / n_pos)


def mean_average_precision(
    scores: np.ndarray,
    truth: np.ndarray,
    class_ids: Sequence[int],
) -> Tuple[float, Dict[int, float]]:
    """mAP treating each class column of scores (n x C) as a query over all rows."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    truth = np.asarray(truth)
    per_class: Dict[int, float] = {}
    for j, c in enumerate(class_ids):
        relevance = truth == c
        if not relevance.any():
            logger.warning("ap_class_skipped", class_id=int(c), reason="no relevant instances")
            continue
        per_class[int(c)] = average_precision(scores[:, j], relevance)
    if not per_class:
        raise MetricError("no class has a relevant instance; mAP undefined")
    return float(np.mean(list(per_class.values()))), per_class


def auc_with_distractors(positive_scores: np.ndarray, negative_scores: np.ndarray) -> float:
    """P(random positive outscores random negative), ties counted 1/2."""
    positive_scores = np.ravel(np.asarray(positive_scores, dtype=np.float64))
    negative_scores = np.ravel(np.asarray(negative_scores, dtype=np.float64))
    if positive_scores.size == 0 or negative_scores.size == 0:
        raise MetricError(
            f"AUC needs positives and negatives, got {positive_scores.size} and {negative_scores.size}"
        )
    labels = np.concatenate([np.ones(positive_scores.size), np.zeros(negative_scores.size)])
    return float(roc_auc_score(labels, np.concatenate([positive_scores, negative_scores])))


def mean_auc(
    scores: np.ndarray,
    truth: np.ndarray,
    class_ids: Sequence[int],
) -> Tuple[float, Dict[int, float]]:
    """Per-class AUC: positives are the class's rows, negatives every other row (distractors included)."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    truth = np.asarray(truth)
    per_class = {
        int(c): auc_with_distractors(scores[truth == c, j], scores[truth != c, j])
        for j, c in enumerate(class_ids)
    }
    return float(np.mean(list(per_class.values()))), per_class
