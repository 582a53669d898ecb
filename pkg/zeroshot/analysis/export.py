"""
Projection export for external visualization.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from ..dataio.base import Dataset, ZeroShotSplit
from ..inference.self_training import self_train
from ..regression.base import EmbeddingModel
from ..regression.solvers import project

ROLE_INSTANCE = "instance"
ROLE_PROTOTYPE = "prototype"
ROLE_ADAPTED = "adapted"


def export_projections(
    model: EmbeddingModel,
    dataset: Dataset,
    split: ZeroShotSplit,
    path: str | Path,
    class_matrix_builder: Callable[[Sequence[str]], np.ndarray],
    self_train_k: Optional[int] = None,
    renormalize: bool = True,
) -> pd.DataFrame:
    """Write normalized test projections and prototypes as CSV rows tagged by role.

    Columns: role, id, class, v0..v{d-1}. Instances use dataset row ids, prototypes
    their class id. Adapted prototypes are included when self_train_k is given.
    """
    test_classes = sorted(split.test_classes)
    rows = dataset.indices_of(test_classes)
    projections = project(model, dataset.X[rows])
    prototypes = class_matrix_builder(dataset.names_of(test_classes))

    blocks = [(ROLE_INSTANCE, rows, dataset.y[rows], projections),
              (ROLE_PROTOTYPE, np.asarray(test_classes), np.asarray(test_classes), prototypes)]
    if self_train_k is not None:
        adapted = self_train(prototypes, projections, self_train_k, renormalize=renormalize).adapted
        blocks.append((ROLE_ADAPTED, np.asarray(test_classes), np.asarray(test_classes), adapted))

    frames = []
    for role, ids, classes, vectors in blocks:
        frame = pd.DataFrame(vectors.T, columns=[f"v{k}" for k in range(vectors.shape[0])])
        frame.insert(0, "class", [dataset.class_names[c] for c in classes])
        frame.insert(0, "id", ids.astype(np.int64))
        frame.insert(0, "role", role)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True)
    table.to_csv(path, index=False, float_format="%.17g")
    return table


def read_projections(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, keep_default_na=False)
