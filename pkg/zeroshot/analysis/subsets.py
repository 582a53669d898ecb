"""
Related / unrelated training-subset curves.

For each split and percentage S, a Related model trains on the top S% of the
training classes ranked by class-name affinity to the split's test set, and an
Unrelated model on the bottom (100 - S)%. Both are scored on the same test classes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd
import structlog

from ..dataio.base import Dataset, ZeroShotSplit
from ..error_handler import ParameterError
from ..evaluation.runner import ExperimentConfig, run_experiment
from .affinity import classname_affinity

logger = structlog.get_logger(__name__)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def rank_by_affinity(Z_all: np.ndarray, split: ZeroShotSplit, op: str) -> List[int]:
    """Training classes ordered by descending affinity (ties: lower class id first)."""
    candidates = sorted(split.train_classes)
    scores = classname_affinity(Z_all, candidates, split.test_classes).by_op(op)
    order = np.lexsort((np.asarray(candidates), -scores))
    return [candidates[i] for i in order]


def select_related(ranked: Sequence[int], percent: float) -> List[int]:
    """Top percent% of ranked classes, at least one, in ascending id order."""
    count = max(1, _round_half_up(len(ranked) * percent / 100.0))
    return sorted(ranked[:count])


def select_unrelated(ranked: Sequence[int], percent: float) -> List[int]:
    """Bottom (100 - percent)% of ranked classes, at least one, in ascending id order."""
    count = max(1, _round_half_up(len(ranked) * (100.0 - percent) / 100.0))
    return sorted(ranked[len(ranked) - count:])


@dataclass
class SubsetCurve:
    """Mean metric per percentage for both subset policies.

    Percentages lie in (0, 100]. baseline is the model trained on every training
    class, i.e. the S = 0 endpoint of the Unrelated curve (and equal to Related at 100).
    """
    percentages: List[float]
    related: List[float]
    unrelated: List[float]
    baseline: float
    op: str
    per_split: Dict[str, List[float]] = field(default_factory=dict, repr=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "percent": self.percentages,
            "related": self.related,
            "unrelated": self.unrelated,
            "baseline": [self.baseline] * len(self.percentages),
        })


def related_subset_curve(
    dataset: Dataset,
    splits: Sequence[ZeroShotSplit],
    percentages: Sequence[float],
    op: str,
    config: ExperimentConfig,
    class_matrix_builder: Callable[[Sequence[str]], np.ndarray],
) -> SubsetCurve:
    """Mean metric over splits for Related and Unrelated models at every percentage."""
    for s in percentages:
        if not 0 < s <= 100:
            raise ParameterError(f"subset percentage must be in (0, 100], got {s}")
    Z_all = class_matrix_builder(list(dataset.class_names))
    ranked = {split.split_id: rank_by_affinity(Z_all, split, op) for split in splits}

    baseline = run_experiment(dataset, config, class_matrix_builder, splits=splits)
    related, unrelated = [], []
    per_split: Dict[str, List[float]] = {}
    for s in percentages:
        rel = run_experiment(dataset, config, class_matrix_builder, splits=splits,
                             train_class_selector=lambda sp, s=s: select_related(ranked[sp.split_id], s))
        unrel = run_experiment(dataset, config, class_matrix_builder, splits=splits,
                               train_class_selector=lambda sp, s=s: select_unrelated(ranked[sp.split_id], s))
        related.append(rel.mean)
        unrelated.append(unrel.mean)
        per_split[f"related@{s:g}"] = rel.values.tolist()
        per_split[f"unrelated@{s:g}"] = unrel.values.tolist()
        logger.info("subset_point", percent=s, related=rel.mean, unrelated=unrel.mean)

    return SubsetCurve(percentages=[float(s) for s in percentages], related=related,
                       unrelated=unrelated, baseline=baseline.mean, op=op, per_split=per_split)
