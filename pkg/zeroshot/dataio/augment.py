"""
Training-set augmentation with auxiliary datasets.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence

import numpy as np
import structlog

from ..error_handler import DataError
from ..wordvec import class_key
from .base import AugmentedTrainSet, Dataset, ZeroShotSplit

logger = structlog.get_logger(__name__)


def rows_to_targets(class_matrix: np.ndarray, row_labels: np.ndarray,
                    class_ids: Sequence[int]) -> np.ndarray:
    """Expand a per-class Z (d x len(class_ids)) into per-row targets (d x n_rows)."""
    position = {int(c): i for i, c in enumerate(class_ids)}
    return class_matrix[:, [position[int(c)] for c in row_labels]]


def build_augmented(
    target: Dataset,
    split: ZeroShotSplit,
    aux: Sequence[Dataset],
    class_matrix_builder: Callable[[Sequence[str]], np.ndarray],
    train_rows: Optional[np.ndarray] = None,
    train_classes: Optional[Sequence[int]] = None,
) -> AugmentedTrainSet:
    """Stack target-train rows and auxiliary rows with their class embeddings.

    Auxiliary classes whose tokenized name equals a target test-class name are
    dropped; differently named but related classes are kept.
    """
    train_classes = tuple(sorted(train_classes if train_classes is not None else split.train_classes))
    if train_rows is None:
        train_rows = target.indices_of(train_classes)
    train_rows = np.asarray(train_rows, dtype=np.int64)

    target_Z = class_matrix_builder(target.names_of(train_classes))
    blocks_X: List[np.ndarray] = [target.X[train_rows]]
    blocks_Z: List[np.ndarray] = [rows_to_targets(target_Z, target.y[train_rows], train_classes)]
    provenance: List[str] = [target.name] * train_rows.size
    row_classes: List[str] = [target.class_names[c] for c in target.y[train_rows]]

    test_keys = {class_key(target.class_names[c]) for c in split.test_classes}
    n_aux = 0
    for dataset in aux:
        if dataset.d_x != target.d_x:
            raise DataError(
                f"auxiliary dataset {dataset.name!r} has d_x={dataset.d_x}, target has {target.d_x}"
            )
        kept = [c for c in range(dataset.n_classes)
                if class_key(dataset.class_names[c]) not in test_keys]
        dropped = [dataset.class_names[c] for c in range(dataset.n_classes) if c not in kept]
        if dropped:
            logger.info("aux_classes_dropped", dataset=dataset.name, split_id=split.split_id,
                        classes=dropped)
        if not kept:
            continue
        rows = dataset.indices_of(kept)
        aux_Z = class_matrix_builder(dataset.names_of(kept))
        blocks_X.append(dataset.X[rows])
        blocks_Z.append(rows_to_targets(aux_Z, dataset.y[rows], kept))
        provenance.extend([dataset.name] * rows.size)
        row_classes.extend(dataset.class_names[c] for c in dataset.y[rows])
        n_aux += rows.size

    return AugmentedTrainSet(
        X_tr=np.vstack(blocks_X),
        Z_tr=np.hstack(blocks_Z),
        provenance=tuple(provenance),
        row_classes=tuple(row_classes),
        n_target=int(train_rows.size),
        n_aux=n_aux,
    )
