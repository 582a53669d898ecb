"""
Transfer correlation between training-class inclusion and test-class accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from ..error_handler import ParameterError, RetentionError

logger = structlog.get_logger(__name__)

MIN_SPLITS = 10
MIN_COOCCURRENCE = 3


@dataclass(frozen=True)
class SplitOutcomeRecord:
    """Which classes were trained on, and how well each test class was recognized."""
    split_id: int
    train_classes: Tuple[int, ...]
    test_classes: Tuple[int, ...]
    test_accuracy: Mapping[int, float]

    def __post_init__(self):
        if set(self.train_classes) & set(self.test_classes):
            raise ParameterError(f"record {self.split_id}: train and test classes overlap")
        missing = set(self.test_classes) - set(self.test_accuracy)
        if missing:
            raise ParameterError(f"record {self.split_id}: no accuracy for test classes {sorted(missing)}")
        if any(not 0.0 <= v <= 1.0 for v in self.test_accuracy.values()):
            raise ParameterError(f"record {self.split_id}: accuracies must lie in [0, 1]")

    def inclusion(self, n_classes: int) -> np.ndarray:
        bits = np.zeros(n_classes)
        bits[list(self.train_classes)] = 1.0
        return bits

    @classmethod
    def from_split_dict(cls, data: Mapping[str, Any]) -> "SplitOutcomeRecord":
        """Build from one per_split entry of a report written with retained predictions."""
        predictions = data.get("predictions")
        if predictions is None:
            raise RetentionError(
                f"split {data.get('split_id')} has no stored predictions; rerun eval with "
                "output.retain_predictions = true (--retain-predictions)",
                split_id=data.get("split_id"),
            )
        truth = np.asarray(predictions["truth"])
        predicted = np.asarray(predictions["predicted"])
        test_classes = tuple(int(c) for c in data["test_classes"])
        accuracy = {}
        for c in test_classes:
            rows = truth == c
            accuracy[c] = float(np.mean(predicted[rows] == c)) if rows.any() else 0.0
        return cls(
            split_id=int(data["split_id"]),
            train_classes=tuple(int(c) for c in data["train_classes"]),
            test_classes=test_classes,
            test_accuracy=accuracy,
        )


def records_from_report(report: Mapping[str, Any]) -> List[SplitOutcomeRecord]:
    return [SplitOutcomeRecord.from_split_dict(entry) for entry in report["per_split"]]


@dataclass(frozen=True)
class TransferCorrelationMatrix:
    """corr[i, j]: association of training on class i with accuracy on test class j."""
    values: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    verbatim: bool = False

    @property
    def n_classes(self) -> int:
        return self.values.shape[0]

    def valid_pairs(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.valid))]


def transfer_correlation(
    records: Sequence[SplitOutcomeRecord],
    n_classes: int,
    verbatim: bool = False,
    min_splits: int = MIN_SPLITS,
    min_cooccurrence: int = MIN_COOCCURRENCE,
) -> TransferCorrelationMatrix:
    """Correlate inclusion bits b_i with test accuracy e_j over splits testing class j.

    The default denominator is std(b) std(e) (Pearson); verbatim=True divides by
    var(b) var(e) instead. Pairs with too few splits or zero variance are masked.
    """
    if len(records) < min_splits:
        raise ParameterError(f"transfer correlation needs >= {min_splits} splits, got {len(records)}")

    inclusion = np.stack([r.inclusion(n_classes) for r in records])
    values = np.zeros((n_classes, n_classes))
    valid = np.zeros((n_classes, n_classes), dtype=bool)

    for j in range(n_classes):
        tested = [s for s, r in enumerate(records) if j in r.test_classes]
        if len(tested) < min_cooccurrence:
            continue
        e = np.array([records[s].test_accuracy[j] for s in tested])
        e_centered = e - e.mean()
        var_e = float(np.mean(e_centered**2))
        if var_e == 0:
            continue
        for i in range(n_classes):
            if i == j:
                continue
            b = inclusion[tested, i]
            b_centered = b - b.mean()
            var_b = float(np.mean(b_centered**2))
            if var_b == 0:
                continue
            cov = float(np.mean(b_centered * e_centered))
            denominator = var_b * var_e if verbatim else np.sqrt(var_b * var_e)
            values[i, j] = cov / denominator
            valid[i, j] = True

    logger.info("transfer_correlation_computed", classes=n_classes, splits=len(records),
                valid_pairs=int(valid.sum()), verbatim=verbatim)
    return TransferCorrelationMatrix(values=values, valid=valid, verbatim=verbatim)


def correlation_frame(matrix: TransferCorrelationMatrix, class_names: Sequence[str]) -> pd.DataFrame:
    """Class-name labelled matrix with masked entries as NaN."""
    return pd.DataFrame(np.where(matrix.valid, matrix.values, np.nan),
                        index=list(class_names), columns=list(class_names))
