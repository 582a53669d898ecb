"""
Test KNN graph construction and the graph Laplacian.
"""
import numpy as np
import pytest

from zeroshot.error_handler import ParameterError
from zeroshot.graph import (
    GraphWeighting,
    build_knn_graph,
    build_knn_graph_from_kernel,
    laplacian_quadratic,
    write_edge_list,
)
from zeroshot.kernels import linear_kernel, squared_distances_from_kernel

from tests.helpers import random_unit_rows


def pairwise_half_sum(F, W):
    """1/2 sum_ij w_ij ||f_i - f_j||^2, computed pair by pair."""
    n = W.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if W[i, j]:
                diff = F[:, i] - F[:, j]
                total += W[i, j] * float(diff @ diff)
    return 0.5 * total


class TestKnnGraph:
    """Adjacency structure."""

    def test_symmetric_without_self_loops(self, rng):
        X = random_unit_rows(rng, 30, 6)
        graph = build_knn_graph(X, 4)
        W = graph.adjacency.toarray()
        np.testing.assert_array_equal(W, W.T)
        np.testing.assert_array_equal(np.diag(W), 0.0)
        assert set(np.unique(W)) <= {0.0, 1.0}
        assert (W.sum(axis=1) >= 4).all()
        assert graph.n_edges == int(W.sum()) // 2
        np.testing.assert_array_equal(graph.degrees, W.sum(axis=1))

    def test_union_of_directed_neighbours(self, rng):
        X = random_unit_rows(rng, 12, 3)
        K = linear_kernel(X)
        graph = build_knn_graph(X, 2)
        W = graph.adjacency.toarray()
        for i in range(12):
            sims = K[i].copy()
            sims[i] = -np.inf
            for j in np.argsort(-sims, kind="stable")[:2]:
                assert W[i, j] == 1.0 and W[j, i] == 1.0

    def test_ties_go_to_lower_index(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        W = build_knn_graph(X, 1).adjacency.toarray()
        np.testing.assert_array_equal(W, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    @pytest.mark.parametrize("k", [0, 5, 6])
    def test_neighbour_count_must_be_below_n(self, k):
        with pytest.raises(ParameterError):
            build_knn_graph(np.eye(5), k)

    def test_heat_weights(self, rng):
        X = random_unit_rows(rng, 15, 4)
        graph = build_knn_graph(X, 3, weighting="heat", bandwidth=0.5)
        assert graph.weighting is GraphWeighting.HEAT
        W = graph.adjacency.toarray()
        D2 = squared_distances_from_kernel(linear_kernel(X))
        mask = W > 0
        np.testing.assert_allclose(W[mask], np.exp(-D2[mask] / 0.5), rtol=1e-12)
        binary = build_knn_graph(X, 3).adjacency.toarray()
        np.testing.assert_array_equal(mask, binary > 0)

    def test_heat_bandwidth_positive(self, rng):
        with pytest.raises(ParameterError):
            build_knn_graph(random_unit_rows(rng, 5, 2), 2, weighting="heat", bandwidth=0.0)

    def test_heat_underflow_rejected(self):
        X = 10.0 * np.eye(4)
        with pytest.raises(ParameterError, match="underflows"):
            build_knn_graph(X, 2, weighting="heat", bandwidth=1e-3)
        graph = build_knn_graph(X, 2, weighting="heat", bandwidth=100.0)
        np.testing.assert_allclose(graph.adjacency.data, np.exp(-2.0))

    def test_kernel_must_be_square(self):
        with pytest.raises(ParameterError):
            build_knn_graph_from_kernel(np.ones((3, 4)), 1)


class TestLaplacian:
    """L = D - W properties."""

    def test_rows_sum_to_zero_and_psd(self, rng):
        for _ in range(10):
            n = int(rng.integers(5, 40))
            graph = build_knn_graph(random_unit_rows(rng, n, 5), int(rng.integers(1, n)))
            L = graph.laplacian.toarray()
            np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
            assert np.linalg.eigvalsh(L).min() >= -1e-9

    def test_quadratic_form_matches_pairwise_sum(self, rng):
        for _ in range(50):
            n = int(rng.integers(4, 25))
            weighting = "heat" if rng.random() < 0.5 else "binary"
            graph = build_knn_graph(random_unit_rows(rng, n, 4), int(rng.integers(1, n)),
                                    weighting=weighting)
            F = rng.standard_normal((3, n))
            expected = pairwise_half_sum(F, graph.adjacency.toarray())
            assert laplacian_quadratic(F, graph.laplacian) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_quadratic_shape_mismatch(self, rng):
        graph = build_knn_graph(random_unit_rows(rng, 6, 3), 2)
        with pytest.raises(ParameterError):
            laplacian_quadratic(np.ones((2, 5)), graph.laplacian)


class TestEdgeList:
    """Edge-list dumps."""

    def test_binary_edges_sorted_upper_triangle(self, tmp_path):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        path = tmp_path / "edges.txt"
        write_edge_list(build_knn_graph(X, 1), path)
        assert path.read_text(encoding="utf-8") == "0 1\n1 2\n"

    def test_heat_edges_carry_weights(self, tmp_path, rng):
        graph = build_knn_graph(random_unit_rows(rng, 8, 3), 2, weighting="heat")
        path = tmp_path / "edges.txt"
        write_edge_list(graph, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == graph.n_edges
        W = graph.adjacency.toarray()
        for line in lines:
            i, j, w = line.split()
            assert int(i) < int(j)
            assert float(w) == W[int(i), int(j)]
