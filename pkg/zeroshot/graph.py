"""
Symmetric KNN graph and unnormalized Laplacian for manifold regularization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import structlog
from scipy import sparse
from scipy.sparse import csgraph

from .error_handler import ParameterError
from .kernels import linear_kernel, squared_distances_from_kernel

logger = structlog.get_logger(__name__)


class GraphWeighting(Enum):
    BINARY = "binary"
    HEAT = "heat"


@dataclass(frozen=True)
class KnnGraph:
    """Union-symmetrized KNN adjacency W, degrees and Laplacian L = D - W."""
    adjacency: sparse.csr_matrix = field(repr=False)
    degrees: np.ndarray = field(repr=False)
    laplacian: sparse.csr_matrix = field(repr=False)
    n_neighbors: int
    weighting: GraphWeighting = GraphWeighting.BINARY

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Undirected edge count."""
        return self.adjacency.nnz // 2


def build_knn_graph(
    X_all: np.ndarray,
    n_neighbors: int,
    weighting: str | GraphWeighting = GraphWeighting.BINARY,
    bandwidth: float = 1.0,
) -> KnnGraph:
    """Build the graph over all instances, ranking neighbours by linear-kernel similarity."""
    return build_knn_graph_from_kernel(linear_kernel(X_all), n_neighbors, weighting, bandwidth)


def build_knn_graph_from_kernel(
    K: np.ndarray,
    n_neighbors: int,
    weighting: str | GraphWeighting = GraphWeighting.BINARY,
    bandwidth: float = 1.0,
) -> KnnGraph:
    """Build the graph from a precomputed square kernel matrix.

    Each node links to its n_neighbors most similar other nodes (ties go to the
    lower index); the directed edges are symmetrized by union.
    """
    weighting = GraphWeighting(weighting)
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ParameterError(f"kernel matrix must be square, got shape {K.shape}")
    if n_neighbors < 1 or n_neighbors >= n:
        raise ParameterError(
            f"graph needs 1 <= K < n, got K={n_neighbors} with n={n} instances",
            n_neighbors=n_neighbors, n=n,
        )
    if weighting is GraphWeighting.HEAT and bandwidth <= 0:
        raise ParameterError(f"heat bandwidth must be > 0, got {bandwidth}")

    similarity = K.copy()
    np.fill_diagonal(similarity, -np.inf)
    neighbors = np.argsort(-similarity, axis=1, kind="stable")[:, :n_neighbors]

    rows = np.repeat(np.arange(n), n_neighbors)
    cols = neighbors.ravel()
    if weighting is GraphWeighting.HEAT:
        sq_dist = squared_distances_from_kernel(K)
        weights = np.exp(-sq_dist[rows, cols] / bandwidth)
        if np.any(weights == 0.0):
            raise ParameterError(
                f"heat bandwidth {bandwidth} underflows "
                f"{int(np.sum(weights == 0.0))} neighbour weights to 0",
                bandwidth=bandwidth,
            )
    else:
        weights = np.ones(rows.size)

    directed = sparse.csr_matrix((weights, (rows, cols)), shape=(n, n))
    adjacency = directed.maximum(directed.T).tocsr()

    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    laplacian = sparse.csr_matrix(csgraph.laplacian(adjacency))
    logger.debug("knn_graph_built", n=n, n_neighbors=n_neighbors,
                 weighting=weighting.value, edges=adjacency.nnz // 2)
    return KnnGraph(adjacency=adjacency, degrees=degrees, laplacian=laplacian,
                    n_neighbors=n_neighbors, weighting=weighting)


def laplacian_quadratic(F: np.ndarray, L) -> float:
    """Tr(F^T F L) for projections F (d x n); equals 1/2 sum_ij w_ij ||f_i - f_j||^2."""
    F = np.atleast_2d(np.asarray(F, dtype=np.float64))
    if F.shape[1] != L.shape[0] or L.shape[0] != L.shape[1]:
        raise ParameterError(
            f"projections have {F.shape[1]} columns but the Laplacian is {L.shape[0]}x{L.shape[1]}"
        )
    LFt = L @ F.T
    return float(np.sum(F.T * np.asarray(LFt)))


def write_edge_list(graph: KnnGraph, path: str | Path) -> None:
    """Dump undirected edges as ``i j`` lines (``i j w`` for weighted graphs), i < j."""
    upper = sparse.triu(graph.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", encoding="utf-8") as f:
        for idx in order:
            i, j, w = int(upper.row[idx]), int(upper.col[idx]), float(upper.data[idx])
            if graph.weighting is GraphWeighting.BINARY:
                f.write(f"{i} {j}\n")
            else:
                f.write(f"{i} {j} {w:.17g}\n")
