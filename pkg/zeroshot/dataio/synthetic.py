"""
Planted-map synthetic data for verification.

Class prototypes z_c lie on the unit sphere of the embedding space; a random map B
with orthonormal columns places class means at B z_c; instances add isotropic noise,
and test-class instances are additionally moved by an offset of norm shift_sigma to
model domain shift.

Shift modes:
  independent  every test class gets its own random direction in feature space
  shared       all test classes move along one direction inside the span of B

With cue_sigma > 0 a second orthonormal block C (orthogonal to B) carries a cue:
training instances get C z_c, test instances get cue_sigma * C eta with fresh
Gaussian eta, so the cue follows the semantics on training classes only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import Dataset, SyntheticSpec, ZeroShotSplit


@dataclass(frozen=True)
class SyntheticData:
    """Everything needed for exact-recovery checks."""
    dataset: Dataset
    class_matrix: np.ndarray = field(repr=False)   # d_z x C, unit columns
    mapping: np.ndarray = field(repr=False)        # d_x x d_z, orthonormal columns
    split: ZeroShotSplit
    offsets: np.ndarray = field(repr=False)        # C x d_x, zero rows for train classes
    clusters: tuple = ()
    cue_map: Optional[np.ndarray] = field(default=None, repr=False)  # d_x x d_z, orthogonal to mapping

    def builder(self):
        """Class-matrix builder resolving this dataset's class names to their planted prototypes."""
        index = {name: i for i, name in enumerate(self.dataset.class_names)}

        def build(class_names):
            return self.class_matrix[:, [index[name] for name in class_names]]

        return build


def synthetic_class_name(class_id: int) -> str:
    return f"cls{class_id:03d}"


def _class_clusters(spec: SyntheticSpec) -> list[int]:
    clusters = [c % spec.n_clusters for c in range(spec.C_train)]
    for t in range(spec.C_test):
        clusters.append(spec.test_cluster if spec.test_cluster is not None else t % spec.n_clusters)
    return clusters


def _draw_prototypes(spec: SyntheticSpec, clusters: list[int], rng: np.random.Generator) -> np.ndarray:
    n_classes = spec.C_train + spec.C_test
    Z = rng.standard_normal((spec.d_z, n_classes))
    if spec.n_clusters > 1:
        blocks = np.array_split(np.arange(spec.d_z), spec.n_clusters)
        weights = np.full((spec.d_z, n_classes), spec.cluster_leak)
        for c, k in enumerate(clusters):
            weights[blocks[k], c] = 1.0
        Z = Z * weights
    return Z / np.linalg.norm(Z, axis=0, keepdims=True)


def _draw_maps(spec: SyntheticSpec, rng: np.random.Generator):
    if spec.cue_sigma > 0:
        Q, _ = np.linalg.qr(rng.standard_normal((spec.d_x, 2 * spec.d_z)))
        return Q[:, : spec.d_z], Q[:, spec.d_z:]
    B, _ = np.linalg.qr(rng.standard_normal((spec.d_x, spec.d_z)))
    return B, None


def _draw_offsets(spec: SyntheticSpec, B: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n_classes = spec.C_train + spec.C_test
    offsets = np.zeros((n_classes, spec.d_x))
    if spec.shift_mode == "shared":
        direction = B @ rng.standard_normal(spec.d_z)
        offsets[spec.C_train:] = spec.shift_sigma * direction / np.linalg.norm(direction)
        return offsets
    for c in range(spec.C_train, n_classes):
        direction = rng.standard_normal(spec.d_x)
        offsets[c] = spec.shift_sigma * direction / np.linalg.norm(direction)
    return offsets


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """Draw a dataset from the planted-map model described by spec."""
    rng = np.random.default_rng(spec.seed)
    n_classes = spec.C_train + spec.C_test
    clusters = _class_clusters(spec)

    Z = _draw_prototypes(spec, clusters, rng)
    B, cue = _draw_maps(spec, rng)
    offsets = _draw_offsets(spec, B, rng)

    rows, labels = [], []
    for c in range(n_classes):
        mean = B @ Z[:, c] + offsets[c]
        noise = spec.noise_sigma * rng.standard_normal((spec.per_class, spec.d_x))
        block = mean[None, :] + noise
        if cue is not None:
            if c < spec.C_train:
                block += (cue @ Z[:, c])[None, :]
            else:
                block += spec.cue_sigma * rng.standard_normal((spec.per_class, spec.d_z)) @ cue.T
        rows.append(block)
        labels.append(np.full(spec.per_class, c))

    X = np.vstack(rows)
    if spec.normalize_rows:
        X = X / np.linalg.norm(X, axis=1, keepdims=True)

    dataset = Dataset(
        name=f"synthetic-{spec.seed}",
        X=X,
        y=np.concatenate(labels),
        class_names=tuple(synthetic_class_name(c) for c in range(n_classes)),
    )
    split = ZeroShotSplit(
        split_id=0,
        train_classes=tuple(range(spec.C_train)),
        test_classes=tuple(range(spec.C_train, n_classes)),
        seed=spec.seed,
    )
    return SyntheticData(dataset=dataset, class_matrix=Z, mapping=B, split=split,
                         offsets=offsets, clusters=tuple(clusters), cue_map=cue)
