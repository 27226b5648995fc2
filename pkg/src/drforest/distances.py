"""Response distance matrices: exact Euclidean and Isomap graph geodesics."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial.distance import pdist, squareform

from .core import DrfError, ValidationError, as_response_matrix, validate_distance_matrix


class DisconnectedGraph(DrfError):
    code = "DisconnectedGraph"

    def __init__(self, component_sizes):
        self.component_sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(
            f"neighborhood graph has {len(self.component_sizes)} connected components "
            f"(sizes {self.component_sizes}); increase k"
        )


@dataclass(frozen=True)
class NeighborhoodGraph:
    """Symmetrized (union) k-NN graph with Euclidean edge weights.

    ``edges`` holds each undirected edge once as ``(i, j, weight)`` with
    ``i < j``.
    """

    n_nodes: int
    k: int
    edges: tuple

    def to_sparse(self) -> sp.csr_matrix:
        if not self.edges:
            return sp.csr_matrix((self.n_nodes, self.n_nodes))
        i, j, w = (np.array(c) for c in zip(*self.edges))
        rows = np.concatenate([i, j]).astype(np.intp)
        cols = np.concatenate([j, i]).astype(np.intp)
        # explicit zeros (duplicate responses) stay edges in csgraph
        return sp.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(self.n_nodes, self.n_nodes))


def euclidean_distances(Y) -> np.ndarray:
    """Pairwise Euclidean distances between response rows."""
    Y = as_response_matrix(Y)
    if Y.shape[0] == 1:
        return validate_distance_matrix(np.zeros((1, 1)))
    return validate_distance_matrix(squareform(pdist(Y, metric="euclidean")))


def knn_neighbors(Y, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows for every row of ``Y``.

    Returns an ``(N, k)`` integer array ordered by increasing distance; equal
    distances are resolved in favour of the lower row index.
    """
    Y = as_response_matrix(Y)
    n = Y.shape[0]
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < N={n}, got {k}")
    D = np.array(euclidean_distances(Y))
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def neighborhood_graph(Y, k: int) -> NeighborhoodGraph:
    Y = as_response_matrix(Y)
    nbrs = knn_neighbors(Y, k)
    D = euclidean_distances(Y)
    pairs = set()
    for i, row in enumerate(nbrs):
        for j in row:
            a, b = (i, int(j)) if i < j else (int(j), i)
            pairs.add((a, b))
    edges = tuple((a, b, float(D[a, b])) for a, b in sorted(pairs))
    return NeighborhoodGraph(n_nodes=Y.shape[0], k=k, edges=edges)


def graph_shortest_paths(graph: NeighborhoodGraph, n_jobs: int = 1) -> np.ndarray:
    """All-pairs shortest path lengths by Dijkstra from every source.

    Sources are split into contiguous blocks when ``n_jobs > 1``; each block
    reads the same immutable sparse graph, so the result does not depend on
    ``n_jobs``.
    """
    G = graph.to_sparse()
    n_comp, labels = connected_components(G, directed=False)
    if n_comp > 1:
        raise DisconnectedGraph(np.bincount(labels))
    n = graph.n_nodes
    if n_jobs <= 1 or n < 2 * n_jobs:
        D = dijkstra(G, directed=False)
    else:
        blocks = np.array_split(np.arange(n), n_jobs)
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda idx: dijkstra(G, directed=False, indices=idx), blocks))
        D = np.vstack(parts)
    # path sums are accumulated per source, so force exact symmetry
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    return D


def isomap_distances(Y, k: int, n_jobs: int = 1) -> np.ndarray:
    """Isomap geodesic distance estimate on a union k-NN graph of ``Y``."""
    return validate_distance_matrix(graph_shortest_paths(neighborhood_graph(Y, k), n_jobs=n_jobs))
