"""
Zero-shot class splits and imbalanced test subsampling.
"""
from __future__ import annotations

from typing import Dict, List, Mapping, Sequence

import numpy as np
import structlog

from ..error_handler import ParameterError
from .base import Dataset, ZeroShotSplit

logger = structlog.get_logger(__name__)

COVERAGE_MIN_SPLITS = 20
MAX_RESAMPLE_ATTEMPTS = 1000


def _draw_split(n_classes: int, split_id: int, sub_seed: int) -> ZeroShotSplit:
    rng = np.random.default_rng(sub_seed)
    order = rng.permutation(n_classes)
    n_test = n_classes // 2
    return ZeroShotSplit(
        split_id=split_id,
        train_classes=tuple(sorted(int(c) for c in order[n_test:])),
        test_classes=tuple(sorted(int(c) for c in order[:n_test])),
        seed=sub_seed,
    )


def class_test_counts(splits: Sequence[ZeroShotSplit], n_classes: int) -> np.ndarray:
    """How many splits hold out each class for testing."""
    counts = np.zeros(n_classes, dtype=np.int64)
    for split in splits:
        counts[list(split.test_classes)] += 1
    return counts


def generate_splits(n_classes: int, n_splits: int, seed: int) -> List[ZeroShotSplit]:
    """Random 50/50 class splits; split s draws from sub-seed ``seed ^ s``.

    The test side takes floor(C/2) classes. With at least 20 splits, splits are
    resampled until every class is tested at least once.
    """
    if n_classes < 2:
        raise ParameterError(f"need at least 2 classes to split, got {n_classes}")
    if n_splits < 1:
        raise ParameterError(f"n_splits must be >= 1, got {n_splits}")

    splits = [_draw_split(n_classes, s, seed ^ s) for s in range(n_splits)]
    if n_splits >= COVERAGE_MIN_SPLITS:
        splits = _ensure_coverage(splits, n_classes, seed)

    freq = class_test_counts(splits, n_classes)
    logger.info("splits_generated", n_classes=n_classes, n_splits=n_splits,
                min_test_frequency=int(freq.min()), max_test_frequency=int(freq.max()))
    return splits


def _ensure_coverage(splits: List[ZeroShotSplit], n_classes: int, seed: int) -> List[ZeroShotSplit]:
    attempt = 0
    while True:
        freq = class_test_counts(splits, n_classes)
        missing = set(np.flatnonzero(freq == 0).tolist())
        if not missing:
            return splits
        # Replace the split whose test classes are the most over-represented.
        victim = max(range(len(splits)),
                     key=lambda s: (min(freq[list(splits[s].test_classes)]), -s))
        old = splits[victim]
        while True:
            attempt += 1
            if attempt > MAX_RESAMPLE_ATTEMPTS:
                raise ParameterError("could not resample splits to cover every class")
            sub_seed = (seed ^ victim) + attempt * 0x9E3779B1
            candidate = _draw_split(n_classes, victim, sub_seed)
            covers_new = bool(missing & set(candidate.test_classes))
            uncovers = any(freq[c] == 1 and c not in candidate.test_classes
                           for c in old.test_classes)
            if covers_new and not uncovers:
                break
        logger.info("split_resampled", split_id=victim, attempt=attempt)
        splits[victim] = candidate


def subsample_test(
    dataset: Dataset,
    split: ZeroShotSplit,
    fraction_map: Mapping[int, float],
    seed: int,
) -> np.ndarray:
    """Per-class uniform subsample of the test instances (sorted row indices).

    Classes absent from fraction_map keep all their instances. Counts use
    round-half-up of n*P/100; a class that would drop to 0 keeps 1 instance.
    """
    test_set = set(split.test_classes)
    for cls, pct in fraction_map.items():
        if cls not in test_set:
            raise ParameterError(f"class {cls} is not a test class of split {split.split_id}")
        if not 0 < pct <= 100:
            raise ParameterError(f"subsample percentage for class {cls} must be in (0, 100], got {pct}")

    rng = np.random.default_rng(seed)
    kept: List[np.ndarray] = []
    for cls in sorted(test_set):
        rows = np.flatnonzero(dataset.y == cls)
        pct = fraction_map.get(cls, 100.0)
        if pct >= 100.0:
            kept.append(rows)
            continue
        n_keep = int(np.floor(rows.size * pct / 100.0 + 0.5))
        if n_keep == 0:
            logger.warning("subsample_rounded_to_zero", class_id=cls, percent=pct, available=rows.size)
            n_keep = 1
        kept.append(np.sort(rng.choice(rows, size=n_keep, replace=False)))
    return np.sort(np.concatenate(kept)) if kept else np.empty(0, dtype=np.int64)


def first_classes_fraction(split: ZeroShotSplit, n_first: int, percent: float) -> Dict[int, float]:
    """Fraction map subsampling only the first n_first test classes of a split."""
    return {cls: percent for cls in split.test_classes[:n_first]}


def fraction_map_from_names(dataset: Dataset, split: ZeroShotSplit,
                            by_name: Mapping[str, float]) -> Dict[int, float]:
    """Translate a class-name keyed percentage map to test-class ids of one split.

    Names of classes that are not tested in this split are ignored.
    """
    index = {name: i for i, name in enumerate(dataset.class_names)}
    unknown = [name for name in by_name if name not in index]
    if unknown:
        raise ParameterError(f"subsample names unknown to dataset {dataset.name!r}: {unknown}")
    test_set = set(split.test_classes)
    return {index[name]: pct for name, pct in by_name.items() if index[name] in test_set}
