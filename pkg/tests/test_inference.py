"""
Test prototype matching, self-training and hubness diagnostics.
"""
import numpy as np
import pandas as pd
import pytest
from structlog.testing import capture_logs

from zeroshot.error_handler import ParameterError
from zeroshot.inference import (
    DistanceMatrix,
    Matcher,
    MatcherFactory,
    distance_matrix,
    gc_predict,
    hubness_skewness,
    k_occurrence,
    nn_predict,
    nrm_predict,
    self_train,
    write_predictions,
)
from zeroshot.inference.matching import gc_ranks


def brute_force_gc(D):
    """Rank(y, x_i) = #{j != i : d_jy <= d_iy}; argmin over prototypes, first wins."""
    n, c = D.shape
    predicted = []
    for i in range(n):
        best, best_rank = 0, None
        for y in range(c):
            rank = sum(1 for j in range(n) if j != i and D[j, y] <= D[i, y])
            if best_rank is None or rank < best_rank:
                best, best_rank = y, rank
        predicted.append(best)
    return np.array(predicted)


def as_distances(values):
    values = np.asarray(values, dtype=float)
    return DistanceMatrix(values=values, instance_ids=range(values.shape[0]),
                          class_ids=range(values.shape[1]))


class TestDistanceMatrix:
    """Euclidean distances between projections and prototypes."""

    def test_matches_brute_force(self, rng):
        F = rng.standard_normal((4, 6))
        P = rng.standard_normal((4, 3))
        D = distance_matrix(F, P, class_ids=[7, 8, 9])
        for i in range(6):
            for j in range(3):
                assert D.values[i, j] == pytest.approx(np.linalg.norm(F[:, i] - P[:, j]), abs=1e-12)
        assert D.class_ids == (7, 8, 9)
        assert D.instance_ids == tuple(range(6))

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            distance_matrix(np.ones((3, 2)), np.ones((4, 2)))

    def test_nan_rejected(self):
        with pytest.raises(ParameterError):
            as_distances([[0.0, np.nan]])

    def test_retrieval_scores_are_negated_distances(self):
        D = as_distances([[1.0, 2.0]])
        np.testing.assert_array_equal(D.retrieval_scores(), [[-1.0, -2.0]])


class TestNearestNeighbour:
    """Plain nearest-prototype matching."""

    def test_picks_nearest_prototype(self):
        F = np.array([[1.0, 0.0], [0.0, 1.0]])
        P = np.array([[0.0, 1.0], [1.0, 0.0]])
        prediction = nn_predict(F, P, class_ids=[4, 2])
        assert prediction.predicted.tolist() == [2, 4]
        assert prediction.matcher is Matcher.NN
        np.testing.assert_allclose(prediction.predicted_scores, [0.0, 0.0], atol=1e-15)

    def test_ties_go_to_lowest_column(self):
        prediction = MatcherFactory.predict(Matcher.NN, as_distances([[1.0, 1.0, 2.0]]))
        assert prediction.predicted.tolist() == [0]


class TestNRM:
    """Column-normalized distances."""

    def test_scales_each_prototype_column(self):
        D = np.array([[1.0, 3.0], [1.0, 4.0]])
        prediction = nrm_predict(as_distances(D))
        effective = D / np.sqrt((D**2).sum(axis=0))
        np.testing.assert_allclose(-prediction.scores, effective, rtol=1e-15)
        assert prediction.predicted.tolist() == [1, 0]

    def test_hub_prototype_loses_its_pull(self):
        # prototype 0 is closest to everyone under plain NN
        D = np.array([[1.0, 1.2], [1.0, 5.0], [1.0, 5.0]])
        assert MatcherFactory.predict("nn", as_distances(D)).predicted.tolist() == [0, 0, 0]
        assert MatcherFactory.predict("nrm", as_distances(D)).predicted.tolist() == [1, 0, 0]

    def test_zero_column_warns(self):
        with capture_logs() as logs:
            prediction = nrm_predict(as_distances([[0.0, 1.0], [0.0, 2.0]]))
        assert prediction.predicted.tolist() == [0, 0]
        assert any(e["event"] == "nrm_zero_column" for e in logs)


class TestGloballyCorrected:
    """Rank-based matching."""

    def test_matches_brute_force_rank_definition(self, rng):
        for trial in range(100):
            D = rng.random((50, 10))
            if trial % 4 == 0:
                D = np.round(D, 1)  # force ties
            prediction = gc_predict(as_distances(D))
            np.testing.assert_array_equal(prediction.columns, brute_force_gc(D))

    def test_ranks_count_other_instances_with_equal_or_smaller_distance(self):
        D = np.array([[1.0], [1.0], [0.5]])
        assert gc_ranks(as_distances(D))[:, 0].tolist() == [2, 2, 0]

    def test_needs_two_instances(self):
        with pytest.raises(ParameterError):
            gc_predict(as_distances([[1.0, 2.0]]))


class TestSelfTraining:
    """Prototype adaptation toward projected test data."""

    def test_prototype_moves_to_mean_of_nearest(self):
        P = np.array([[1.0, 0.0], [0.0, 1.0]])
        F = np.array([[0.9, 0.8, 0.1, 0.0], [0.1, 0.0, 0.9, 1.0]])
        adapted = self_train(P, F, k=2, renormalize=False)
        np.testing.assert_allclose(adapted.adapted[:, 0], [0.85, 0.05])
        np.testing.assert_allclose(adapted.adapted[:, 1], [0.05, 0.95])
        np.testing.assert_array_equal(adapted.original, P)

    def test_renormalized_by_default(self, rng):
        F = rng.standard_normal((3, 20))
        adapted = self_train(rng.standard_normal((3, 4)), F, k=5)
        np.testing.assert_allclose(np.linalg.norm(adapted.adapted, axis=0), 1.0, atol=1e-12)

    def test_k_clamped_to_instances(self, rng):
        F = rng.standard_normal((3, 4))
        with capture_logs() as logs:
            adapted = self_train(rng.standard_normal((3, 2)), F, k=100, renormalize=False)
        assert adapted.k == 4
        np.testing.assert_allclose(adapted.adapted[:, 0], F.mean(axis=1))
        assert any(e["event"] == "self_train_k_clamped" for e in logs)

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            self_train(np.ones((2, 1)), np.empty((2, 0)), k=1)
        with pytest.raises(ParameterError):
            self_train(np.ones((2, 1)), np.ones((2, 3)), k=0)

    def test_self_training_fixes_shifted_prototypes(self, rng):
        # test data sits around prototypes rotated away from the given ones
        true = np.eye(3)
        F = np.repeat(true, 10, axis=1) + 0.05 * rng.standard_normal((3, 30))
        given = true + np.array([[0.0, 0.6, 0.0], [0.6, 0.0, 0.0], [0.0, 0.0, 0.0]])
        truth = np.repeat(np.arange(3), 10)
        adapted = self_train(given, F, k=10).adapted
        assert np.mean(nn_predict(F, adapted).predicted == truth) == 1.0


class TestHubness:
    """k-occurrence skewness."""

    def test_uniform_occurrence_has_zero_skew(self):
        D = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(k_occurrence(D), [1, 1])
        assert hubness_skewness(D) == 0.0

    def test_single_hub_is_positively_skewed(self):
        D = np.array([[0.0, 1.0, 1.0, 1.0]] * 6)
        np.testing.assert_array_equal(k_occurrence(D), [6, 0, 0, 0])
        assert hubness_skewness(D) > 0


class TestFactoryAndOutput:
    """Matcher dispatch and prediction files."""

    @pytest.mark.parametrize("name", ["nn", "nrm", "gc"])
    def test_create_each_matcher(self, name):
        prediction = MatcherFactory.predict(name, as_distances([[0.1, 0.9], [0.8, 0.2]]), self_trained=True)
        assert prediction.matcher is Matcher(name)
        assert prediction.self_trained

    def test_unknown_matcher(self):
        with pytest.raises(ValueError):
            MatcherFactory.create_matcher("csls")

    def test_prediction_csv(self, tmp_path):
        D = DistanceMatrix(values=np.array([[0.5, 0.25], [1.0, 2.0]]), instance_ids=[10, 11],
                           class_ids=[3, 4])
        prediction = MatcherFactory.predict("nn", D)
        path = tmp_path / "predictions.csv"
        write_predictions(prediction, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["instance_id", "predicted_class", "score"]
        assert frame["instance_id"].tolist() == [10, 11]
        assert frame["predicted_class"].tolist() == [4, 3]
        assert frame["score"].tolist() == [-0.25, -1.0]
