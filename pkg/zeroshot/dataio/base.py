"""
Dataset, split and training-set structures shared across the toolkit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ..error_handler import DataError, ParameterError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (N x d_x), integer labels y, and the class-name table."""
    name: str
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    class_names: Tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise DataError(f"dataset {self.name!r}: X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(
                f"dataset {self.name!r}: {y.shape[0] if y.ndim else 0} labels for {X.shape[0]} rows"
            )
        if not np.all(np.isfinite(X)):
            raise DataError(f"dataset {self.name!r}: features contain NaN or Inf")
        n_classes = len(self.class_names)
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise DataError(f"dataset {self.name!r}: labels must lie in [0, {n_classes})")
        if np.bincount(y, minlength=n_classes).min(initial=1) == 0:
            raise DataError(f"dataset {self.name!r}: every class needs at least one instance")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def d_x(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def indices_of(self, class_ids: Sequence[int]) -> np.ndarray:
        """Row indices (ascending) whose label is in class_ids."""
        return np.flatnonzero(np.isin(self.y, np.asarray(list(class_ids), dtype=np.int64)))

    def names_of(self, class_ids: Sequence[int]) -> list[str]:
        return [self.class_names[c] for c in class_ids]


@dataclass(frozen=True)
class ZeroShotSplit:
    """Disjoint training/testing class sets over one dataset."""
    split_id: int
    train_classes: Tuple[int, ...]
    test_classes: Tuple[int, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train_classes", tuple(int(c) for c in self.train_classes))
        object.__setattr__(self, "test_classes", tuple(int(c) for c in self.test_classes))
        if set(self.train_classes) & set(self.test_classes):
            raise ParameterError(f"split {self.split_id}: train and test classes overlap")

    @property
    def n_classes(self) -> int:
        return len(self.train_classes) + len(self.test_classes)

    def to_dict(self) -> dict:
        return {
            "split_id": self.split_id,
            "train_classes": list(self.train_classes),
            "test_classes": list(self.test_classes),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class AugmentedTrainSet:
    """Labeled training rows: target-train rows first, then auxiliary rows."""
    X_tr: np.ndarray = field(repr=False)
    Z_tr: np.ndarray = field(repr=False)
    provenance: Tuple[str, ...]
    row_classes: Tuple[str, ...]
    n_target: int
    n_aux: int

    def __post_init__(self):
        if self.X_tr.shape[0] != self.Z_tr.shape[1]:
            raise DataError(
                f"augmented set has {self.X_tr.shape[0]} rows but {self.Z_tr.shape[1]} targets"
            )

    @property
    def n_labeled(self) -> int:
        return self.n_target + self.n_aux


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the planted-map generator."""
    C_train: int = 6
    C_test: int = 4
    per_class: int = 30
    d_x: int = 20
    d_z: int = 5
    noise_sigma: float = 0.0
    shift_sigma: float = 0.0
    seed: int = 0
    n_clusters: int = 1
    cluster_leak: float = 0.1
    test_cluster: Optional[int] = None
    shift_mode: str = "independent"
    cue_sigma: float = 0.0
    normalize_rows: bool = False

    @classmethod
    def shifted_reference(cls, **overrides) -> "SyntheticSpec":
        """Domain-shift benchmark: shared in-span test offset, cue channel, unit rows.

        Pick shift_sigma so that plain NN accuracy lands in the middle band.
        """
        settings = dict(noise_sigma=0.05, shift_sigma=1.5, shift_mode="shared",
                        cue_sigma=0.3, normalize_rows=True)
        settings.update(overrides)
        return cls(**settings)

    def __post_init__(self):
        for name in ("C_train", "C_test", "per_class", "d_x", "d_z", "n_clusters"):
            if getattr(self, name) < 1:
                raise ParameterError(f"SyntheticSpec.{name} must be positive")
        if self.d_x < self.d_z:
            raise ParameterError("SyntheticSpec needs d_x >= d_z")
        if self.noise_sigma < 0 or self.shift_sigma < 0 or self.cluster_leak < 0:
            raise ParameterError("SyntheticSpec sigmas and cluster_leak must be >= 0")
        if self.n_clusters > self.d_z:
            raise ParameterError("SyntheticSpec needs n_clusters <= d_z")
        if self.test_cluster is not None and not 0 <= self.test_cluster < self.n_clusters:
            raise ParameterError("SyntheticSpec.test_cluster out of range")
        if self.shift_mode not in ("independent", "shared"):
            raise ParameterError(
                f"SyntheticSpec.shift_mode must be 'independent' or 'shared', got {self.shift_mode!r}"
            )
        if self.cue_sigma < 0:
            raise ParameterError("SyntheticSpec.cue_sigma must be >= 0")
        if self.cue_sigma > 0 and self.d_x < 2 * self.d_z:
            raise ParameterError("SyntheticSpec with a cue channel needs d_x >= 2 * d_z")
