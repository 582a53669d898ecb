"""
Test metrics, the split runner and report files.
"""
import itertools
import time

import numpy as np
import pytest

from zeroshot.dataio.base import Dataset, SyntheticSpec
from zeroshot.dataio.synthetic import generate_synthetic
from zeroshot.error_handler import EXIT_CONFIG, MetricError, ParameterError, SplitFailure
from zeroshot.evaluation import (
    ExperimentConfig,
    accuracy,
    auc_with_distractors,
    average_precision,
    class_balanced_accuracy,
    evaluate_split,
    mean_auc,
    mean_average_precision,
    read_report,
    run_experiment,
    write_report,
)
from zeroshot.evaluation.reports import REPORT_CSV, REPORT_JSON, report_json
from zeroshot.evaluation.runner import split_sub_seed
from zeroshot.inference.base import Matcher
from zeroshot.regression.base import HyperParams, Variant


def pairwise_auc(pos, neg):
    """Fraction of (positive, negative) pairs ordered correctly, ties counted 1/2."""
    wins = 0.0
    for p, n in itertools.product(pos, neg):
        wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))


def ridge_config(**changes):
    base = dict(variant=Variant.RIDGE, hyperparams=HyperParams(gamma_a=1e-10, gamma_i=0.0),
                n_splits=3, seed=7)
    base.update(changes)
    return ExperimentConfig(**base)


class TestClassificationMetrics:
    """Accuracy variants."""

    def test_accuracy(self):
        assert accuracy(np.array([1, 2, 2, 3]), np.array([1, 2, 3, 3])) == 0.75

    def test_class_balanced_accuracy_weighs_classes_equally(self):
        truth = np.array([0, 0, 0, 1])
        predicted = np.array([0, 0, 0, 0])
        assert accuracy(predicted, truth) == 0.75
        assert class_balanced_accuracy(predicted, truth) == 0.5

    def test_empty_or_misaligned(self):
        with pytest.raises(MetricError):
            accuracy(np.array([]), np.array([]))
        with pytest.raises(MetricError):
            accuracy(np.array([1, 2]), np.array([1]))


class TestRetrievalMetrics:
    """Average precision and AUC."""

    def test_average_precision_hand_computed(self):
        ap = average_precision(np.array([0.9, 0.8, 0.7, 0.6]), np.array([1, 0, 1, 0]))
        assert ap == pytest.approx((1.0 + 2.0 / 3.0) / 2.0)

    def test_ties_ranked_by_instance_index(self):
        assert average_precision(np.array([0.5, 0.5]), np.array([0, 1])) == 0.5
        assert average_precision(np.array([0.5, 0.5]), np.array([1, 0])) == 1.0

    def test_no_relevant_instance(self):
        with pytest.raises(MetricError):
            average_precision(np.array([0.1, 0.2]), np.array([0, 0]))

    def test_map_skips_absent_classes(self):
        scores = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3]])
        m_ap, per_class = mean_average_precision(scores, np.array([5, 5, 5]), [5, 6])
        assert per_class == {5: 1.0}
        assert m_ap == 1.0

    def test_auc_matches_pairwise_count(self, rng):
        for _ in range(20):
            pos = np.round(rng.random(int(rng.integers(1, 12))), 1)
            neg = np.round(rng.random(int(rng.integers(1, 12))), 1)
            assert auc_with_distractors(pos, neg) == pytest.approx(pairwise_auc(pos, neg), abs=1e-12)

    def test_auc_needs_both_sides(self):
        with pytest.raises(MetricError):
            auc_with_distractors(np.array([0.5]), np.array([]))

    def test_mean_auc_uses_other_rows_as_negatives(self):
        scores = np.array([[0.9, 0.0], [0.1, 0.8], [0.5, 0.5]])
        truth = np.array([0, 1, 99])
        m_auc, per_class = mean_auc(scores, truth, [0, 1])
        assert per_class == {0: 1.0, 1: 1.0}
        assert m_auc == 1.0


class TestExperimentConfig:
    """Pipeline validation."""

    def test_augmented_variant_not_selectable(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(variant=Variant.AUGMENTED_RIDGE)

    def test_auc_needs_distractors(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(metric="auc")

    def test_sub_seed_is_deterministic(self):
        assert split_sub_seed(7, 3) == split_sub_seed(7, 3)
        assert split_sub_seed(7, 0) == 7
        assert split_sub_seed(7, 1) != split_sub_seed(7, 2)


class TestRunner:
    """Split-based evaluation."""

    def test_planted_map_reaches_perfect_accuracy(self, planted):
        report = run_experiment(planted.dataset, ridge_config(), planted.builder())
        assert report.values.tolist() == [1.0, 1.0, 1.0]
        assert report.mean == 1.0
        assert report.std == 0.0
        for result in report.per_split:
            assert result.mean_average_precision == 1.0
            assert result.n_test == 150
            assert result.variant is Variant.RIDGE

    @pytest.mark.parametrize("workers", [4, 8])
    def test_results_independent_of_worker_count(self, planted, workers):
        config = ExperimentConfig(n_splits=8, seed=1, hyperparams=HyperParams(gamma_a=1e-4),
                                  matcher=Matcher.NRM, self_train=True)
        serial = run_experiment(planted.dataset, config, planted.builder())
        pooled = run_experiment(planted.dataset, ExperimentConfig(**{**config.__dict__, "workers": workers}),
                                planted.builder())
        assert report_json(serial) == report_json(pooled)
        assert [r.split.split_id for r in pooled.per_split] == list(range(8))

    def test_retrieval_identical_across_matchers(self):
        data = generate_synthetic(SyntheticSpec(noise_sigma=0.2, seed=3))
        hp = HyperParams(gamma_a=1e-3, gamma_i=0.0)
        results = [
            evaluate_split(data.dataset, data.split, ridge_config(matcher=m, hyperparams=hp),
                           data.builder())
            for m in (Matcher.NN, Matcher.NRM, Matcher.GC)
        ]
        for other in results[1:]:
            assert other.per_class_ap == results[0].per_class_ap
            assert other.mean_average_precision == results[0].mean_average_precision

    def test_distractors_and_auc(self, planted):
        config = ridge_config(metric="auc", distractors_per_class=2, n_splits=2)
        report = run_experiment(planted.dataset, config, planted.builder())
        for result in report.per_split:
            assert result.n_distractors == 10
            assert result.n_test == 150
            assert result.n_labeled == 140
            assert result.metric == result.auc
            assert 0.0 <= result.auc <= 1.0

    def test_retained_predictions(self, planted):
        report = run_experiment(planted.dataset, ridge_config(retain_predictions=True, n_splits=1),
                                planted.builder())
        stored = report.per_split[0].predictions
        assert len(stored["instance_ids"]) == len(stored["truth"]) == len(stored["predicted"]) == 150
        assert stored["truth"] == stored["predicted"]

    def test_subsampled_test_set(self, planted):
        names = {planted.dataset.class_names[c]: 10.0 for c in range(10)}
        report = run_experiment(planted.dataset, ridge_config(subsample=names, n_splits=1),
                                planted.builder())
        assert report.per_split[0].n_test == 15

    def test_failing_split_is_wrapped(self, planted):
        config = ridge_config(subsample={"no-such-class": 50.0})
        with pytest.raises(SplitFailure) as excinfo:
            run_experiment(planted.dataset, config, planted.builder())
        assert excinfo.value.split_id == 0
        assert excinfo.value.exit_code == EXIT_CONFIG
        assert isinstance(excinfo.value.cause, ParameterError)

    def test_restricted_training_classes(self, planted):
        selector = lambda split: split.train_classes[:2]  # noqa: E731
        report = run_experiment(planted.dataset, ridge_config(n_splits=1), planted.builder(),
                                train_class_selector=selector)
        assert report.per_split[0].n_labeled == 60

    def test_auxiliary_rows_join_the_training_set(self, planted):
        ds = planted.dataset
        aux = Dataset(name="aux", X=ds.X[ds.y == 0], y=np.zeros(30, dtype=int), class_names=("cls000",))
        for variant, tag in ((Variant.RIDGE, Variant.AUGMENTED_RIDGE),
                             (Variant.MANIFOLD, Variant.AUGMENTED_MANIFOLD)):
            config = ridge_config(variant=variant, hyperparams=HyperParams(gamma_a=1e-6, gamma_i=1.0))
            report = run_experiment(ds, config, planted.builder(), aux=[aux])
            for result in report.per_split:
                held_out = 0 in result.split.test_classes
                assert result.n_labeled == 150 + (0 if held_out else 30)
                assert result.variant is tag


class TestReports:
    """Report files."""

    def test_written_twice_identical(self, tmp_path, planted):
        report = run_experiment(planted.dataset, ridge_config(n_splits=2), planted.builder())
        write_report(report, tmp_path / "a")
        write_report(report, tmp_path / "b")
        for name in (REPORT_JSON, REPORT_CSV):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_runtime_only_on_request(self, tmp_path, planted):
        report = run_experiment(planted.dataset, ridge_config(n_splits=1), planted.builder())
        write_report(report, tmp_path / "plain")
        write_report(report, tmp_path / "timed", include_runtime=True)
        assert "runtime_seconds" not in read_report(tmp_path / "plain")
        assert read_report(tmp_path / "timed")["runtime_seconds"] >= 0.0

    def test_csv_has_one_row_per_split(self, tmp_path, planted):
        report = run_experiment(planted.dataset, ridge_config(n_splits=3), planted.builder())
        paths = write_report(report, tmp_path)
        lines = paths["csv"].read_text(encoding="utf-8").splitlines()
        assert lines[0] == "split_id,metric"
        assert len(lines) == 4

    def test_single_split_std_is_zero(self, planted):
        report = run_experiment(planted.dataset, ridge_config(n_splits=1), planted.builder())
        assert report.std == 0.0
        assert report.to_dict()["std"] == 0.0


SHIFT_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)
SHIFT_PARAMS = HyperParams(gamma_a=1e-3, gamma_i=40.0, graph_k=5, self_train_k=20)


def shifted_accuracies(shift, variant, self_train, n_seeds=50):
    config = ExperimentConfig(variant=variant, self_train=self_train, hyperparams=SHIFT_PARAMS,
                              n_splits=1)
    values = []
    for seed in range(n_seeds):
        data = generate_synthetic(SyntheticSpec.shifted_reference(shift_sigma=shift, seed=seed))
        values.append(evaluate_split(data.dataset, data.split, config, data.builder()).accuracy)
    return np.array(values)


@pytest.mark.slow
class TestDomainShift:
    """Self-training and manifold regularization on the shifted reference generator."""

    def test_mitigation_ordering(self):
        for shift in SHIFT_GRID:
            plain = shifted_accuracies(shift, Variant.RIDGE, False)
            if plain.mean() <= 0.7:
                break
        assert 0.4 <= plain.mean() <= 0.7
        ridge_st = shifted_accuracies(shift, Variant.RIDGE, True)
        manifold_st = shifted_accuracies(shift, Variant.MANIFOLD, True)
        assert ridge_st.mean() >= plain.mean()
        assert np.sum(ridge_st >= plain) > plain.size / 2
        assert manifold_st.mean() >= ridge_st.mean()


@pytest.mark.slow
class TestRuntime:
    """Wall-clock budget of a full manifold run."""

    def test_fifty_manifold_splits_within_a_minute(self):
        data = generate_synthetic(SyntheticSpec(C_train=10, C_test=10, per_class=100, d_x=100,
                                                d_z=10, noise_sigma=0.1))
        assert data.dataset.n_instances == 2000
        config = ExperimentConfig(variant=Variant.MANIFOLD, n_splits=50, workers=4,
                                  hyperparams=HyperParams(gamma_a=1e-3))
        started = time.perf_counter()
        report = run_experiment(data.dataset, config, data.builder())
        assert time.perf_counter() - started < 60.0
        assert len(report.per_split) == 50
