"""
Split-based experiment runner.

Each split is an independent work unit: hold out the test classes, fit the
regressor on the training classes (plus auxiliary data), project the unlabeled
batch, optionally self-train, match and score. Splits may run in a thread pool;
results are folded in split-id order so reports do not depend on scheduling.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import structlog

from ..config import RunConfig
from ..dataio.augment import rows_to_targets
from ..dataio.base import Dataset, ZeroShotSplit
from ..dataio.splits import fraction_map_from_names, generate_splits, subsample_test
from ..error_handler import ParameterError, SplitFailure
from ..graph import GraphWeighting
from ..inference.base import Matcher, Prediction
from ..inference.factory import MatcherFactory
from ..inference.hubness import hubness_skewness
from ..inference.matching import distance_matrix
from ..inference.self_training import self_train
from ..regression.base import EmbeddingModel, HyperParams, Variant
from ..regression.factory import RegressorFactory
from ..regression.solvers import fit_augmented, project
from .metrics import accuracy, class_balanced_accuracy, mean_auc, mean_average_precision

logger = structlog.get_logger(__name__)

SEED_MIX = 0x9E3779B97F4A7C15
ClassMatrixBuilder = Callable[[Sequence[str]], np.ndarray]


def split_sub_seed(base_seed: int, split_id: int) -> int:
    """Per-split seed: base_seed XOR (split_id * odd constant mod 2^64)."""
    return int(base_seed) ^ ((int(split_id) * SEED_MIX) % 2**64)


@dataclass(frozen=True)
class ExperimentConfig:
    """Pipeline choices for one experiment."""
    variant: Variant = Variant.MANIFOLD
    matcher: Matcher = Matcher.NN
    self_train: bool = False
    hyperparams: HyperParams = field(default_factory=HyperParams)
    n_splits: int = 50
    seed: int = 0
    metric: str = "accuracy"
    subsample: Dict[str, float] = field(default_factory=dict)
    distractors_per_class: int = 0
    renormalize_adapted: bool = True
    retain_predictions: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "matcher", Matcher(self.matcher))
        if self.variant not in (Variant.RIDGE, Variant.MANIFOLD):
            raise ParameterError(
                f"experiment variant must be ridge or manifold, got {self.variant.value!r}; "
                "augmentation follows from the auxiliary datasets"
            )
        if self.metric not in ("accuracy", "map", "auc"):
            raise ParameterError(f"unknown metric {self.metric!r}")
        if self.metric == "auc" and self.distractors_per_class < 1:
            raise ParameterError("metric 'auc' needs distractors_per_class > 0")
        if self.n_splits < 1 or self.workers < 1:
            raise ParameterError("n_splits and workers must be >= 1")
        self.hyperparams.validate()

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "ExperimentConfig":
        m, i, ev = config.model, config.inference, config.evaluation
        return cls(
            variant=Variant(m.variant),
            matcher=Matcher(i.matcher),
            self_train=i.self_train,
            hyperparams=HyperParams(
                gamma_a=m.gamma_a,
                gamma_i=m.gamma_i,
                graph_k=m.graph_k,
                self_train_k=i.self_train_k,
                graph_weighting=GraphWeighting(m.graph_weighting),
                heat_bandwidth=m.heat_bandwidth,
            ),
            n_splits=ev.n_splits,
            seed=ev.seed,
            metric=ev.metric,
            subsample=dict(ev.subsample),
            distractors_per_class=ev.distractors_per_class,
            renormalize_adapted=i.renormalize_adapted,
            retain_predictions=config.output.retain_predictions,
            workers=config.runtime.workers,
        )

    def to_dict(self) -> Dict[str, Any]:
        hp = asdict(self.hyperparams)
        hp["graph_weighting"] = self.hyperparams.graph_weighting.value
        return {
            "variant": self.variant.value,
            "matcher": self.matcher.value,
            "self_train": self.self_train,
            "hyperparams": hp,
            "n_splits": self.n_splits,
            "seed": self.seed,
            "metric": self.metric,
            "subsample": dict(sorted(self.subsample.items())),
            "distractors_per_class": self.distractors_per_class,
            "renormalize_adapted": self.renormalize_adapted,
            "retain_predictions": self.retain_predictions,
        }


@dataclass
class SplitResult:
    """Scores of one split (and its predictions when retained)."""
    split: ZeroShotSplit
    metric: float
    accuracy: float
    class_balanced_accuracy: float
    mean_average_precision: float
    per_class_ap: Dict[int, float]
    hubness: float
    n_labeled: int
    n_test: int
    n_distractors: int
    variant: Variant
    auc: Optional[float] = None
    predictions: Optional[Dict[str, List[int]]] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            **self.split.to_dict(),
            "metric": self.metric,
            "accuracy": self.accuracy,
            "class_balanced_accuracy": self.class_balanced_accuracy,
            "mean_average_precision": self.mean_average_precision,
            "per_class_ap": {str(c): v for c, v in sorted(self.per_class_ap.items())},
            "hubness": self.hubness,
            "n_labeled": self.n_labeled,
            "n_test": self.n_test,
            "n_distractors": self.n_distractors,
            "variant": self.variant.value,
        }
        if self.auc is not None:
            data["auc"] = self.auc
        if self.predictions is not None:
            data["predictions"] = self.predictions
        return data


@dataclass
class ExperimentReport:
    """Per-split metric values and their aggregate."""
    config: Dict[str, Any]
    metric: str
    per_split: List[SplitResult]
    runtime_seconds: Optional[float] = None

    @property
    def values(self) -> np.ndarray:
        return np.array([r.metric for r in self.per_split], dtype=np.float64)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        """Sample standard deviation; 0 for a single split."""
        if self.values.size < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))

    def to_dict(self, include_runtime: bool = False) -> Dict[str, Any]:
        data = {
            "config": self.config,
            "metric": self.metric,
            "per_split": [r.to_dict() for r in self.per_split],
            "mean": self.mean,
            "std": self.std,
        }
        if include_runtime and self.runtime_seconds is not None:
            data["runtime_seconds"] = self.runtime_seconds
        return data


def _hold_out_distractors(dataset: Dataset, train_classes: Sequence[int], per_class: int,
                          rng: np.random.Generator) -> np.ndarray:
    picked = []
    for cls in train_classes:
        rows = np.flatnonzero(dataset.y == cls)
        if per_class >= rows.size:
            raise ParameterError(
                f"class {dataset.class_names[cls]!r} has {rows.size} instances; "
                f"cannot hold out {per_class} distractors and keep one for training"
            )
        picked.append(rng.choice(rows, size=per_class, replace=False))
    return np.sort(np.concatenate(picked)) if picked else np.empty(0, dtype=np.int64)


def fit_split_model(
    dataset: Dataset,
    split: ZeroShotSplit,
    config: ExperimentConfig,
    class_matrix_builder: ClassMatrixBuilder,
    train_rows: np.ndarray,
    train_classes: Sequence[int],
    X_te: np.ndarray,
    aux: Sequence[Dataset] = (),
) -> EmbeddingModel:
    """Fit the configured regressor for one split."""
    hp = config.hyperparams
    if aux:
        if config.variant is Variant.RIDGE:
            hp = hp.with_updates(gamma_i=0.0)
        return fit_augmented(dataset, split, aux, X_te, hp, class_matrix_builder,
                             train_rows=train_rows, train_classes=train_classes)
    Z_classes = class_matrix_builder(dataset.names_of(train_classes))
    Z_tr = rows_to_targets(Z_classes, dataset.y[train_rows], train_classes)
    return RegressorFactory.fit(config.variant, dataset.X[train_rows], Z_tr, X_te, hp)


def evaluate_split(
    dataset: Dataset,
    split: ZeroShotSplit,
    config: ExperimentConfig,
    class_matrix_builder: ClassMatrixBuilder,
    aux: Sequence[Dataset] = (),
    train_classes: Optional[Sequence[int]] = None,
) -> SplitResult:
    """Run the full pipeline for one split.

    train_classes restricts the training side to a subset of the split's
    training classes; test classes are always the split's.
    """
    sub_seed = split_sub_seed(config.seed, split.split_id)
    rng = np.random.default_rng(sub_seed)
    train_classes = tuple(sorted(split.train_classes if train_classes is None else train_classes))
    test_classes = tuple(sorted(split.test_classes))

    train_rows = dataset.indices_of(train_classes)
    distractor_rows = np.empty(0, dtype=np.int64)
    if config.distractors_per_class > 0:
        distractor_rows = _hold_out_distractors(dataset, train_classes,
                                                config.distractors_per_class, rng)
        train_rows = np.setdiff1d(train_rows, distractor_rows)

    if config.subsample:
        fractions = fraction_map_from_names(dataset, split, config.subsample)
        test_rows = subsample_test(dataset, split, fractions, sub_seed)
    else:
        test_rows = dataset.indices_of(test_classes)
    eval_rows = np.union1d(test_rows, distractor_rows)
    X_te = dataset.X[eval_rows]

    model = fit_split_model(dataset, split, config, class_matrix_builder, train_rows,
                            train_classes, X_te, aux)
    projections = project(model, X_te)
    prototypes = class_matrix_builder(dataset.names_of(test_classes))
    if config.self_train:
        prototypes = self_train(prototypes, projections, config.hyperparams.self_train_k,
                                renormalize=config.renormalize_adapted).adapted

    distances = distance_matrix(projections, prototypes, instance_ids=eval_rows,
                                class_ids=test_classes)
    prediction: Prediction = MatcherFactory.predict(config.matcher, distances, config.self_train)

    truth = dataset.y[eval_rows]
    is_test = np.isin(truth, test_classes)
    acc = accuracy(prediction.predicted[is_test], truth[is_test])
    balanced = class_balanced_accuracy(prediction.predicted[is_test], truth[is_test])
    retrieval = distances.retrieval_scores()
    m_ap, per_class_ap = mean_average_precision(retrieval[is_test], truth[is_test], test_classes)
    auc = mean_auc(retrieval, truth, test_classes)[0] if distractor_rows.size else None

    metric_value = {"accuracy": acc, "map": m_ap, "auc": auc}[config.metric]
    predictions = None
    if config.retain_predictions:
        predictions = {
            "instance_ids": [int(i) for i in eval_rows],
            "truth": [int(t) for t in truth],
            "predicted": [int(p) for p in prediction.predicted],
        }
    return SplitResult(
        split=split,
        metric=float(metric_value),
        accuracy=acc,
        class_balanced_accuracy=balanced,
        mean_average_precision=m_ap,
        per_class_ap=per_class_ap,
        hubness=hubness_skewness(-prediction.scores),
        n_labeled=model.n_labeled,
        n_test=int(is_test.sum()),
        n_distractors=int(distractor_rows.size),
        variant=model.variant,
        auc=auc,
        predictions=predictions,
    )


def _evaluate_guarded(dataset, split, config, builder, aux, train_classes) -> SplitResult:
    log = logger.bind(split_id=split.split_id)
    log.info("split_started")
    try:
        result = evaluate_split(dataset, split, config, builder, aux, train_classes)
    except Exception as e:
        raise SplitFailure(split.split_id, e) from e
    log.info("split_finished", metric=config.metric, value=result.metric)
    return result


def run_experiment(
    dataset: Dataset,
    config: ExperimentConfig,
    class_matrix_builder: ClassMatrixBuilder,
    aux: Sequence[Dataset] = (),
    splits: Optional[Sequence[ZeroShotSplit]] = None,
    train_class_selector: Optional[Callable[[ZeroShotSplit], Sequence[int]]] = None,
) -> ExperimentReport:
    """Evaluate every split and aggregate; the first failing split aborts the run."""
    started = time.perf_counter()
    if splits is None:
        splits = generate_splits(dataset.n_classes, config.n_splits, config.seed)

    def work(split: ZeroShotSplit) -> SplitResult:
        train_classes = train_class_selector(split) if train_class_selector else None
        return _evaluate_guarded(dataset, split, config, class_matrix_builder, aux, train_classes)

    if config.workers == 1:
        results = [work(split) for split in splits]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, splits))
    results.sort(key=lambda r: r.split.split_id)

    report = ExperimentReport(
        config=config.to_dict(),
        metric=config.metric,
        per_split=results,
        runtime_seconds=time.perf_counter() - started,
    )
    logger.info("experiment_finished", metric=config.metric, mean=report.mean, std=report.std,
                splits=len(results), runtime_seconds=round(report.runtime_seconds, 3))
    return report
