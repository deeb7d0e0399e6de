"""Exact k-nearest-neighbor graph construction.

Brute-force O(N^2 n) search with the squared-distance expansion
||x_i - x_j||^2 = ||x_i||^2 + ||x_j||^2 - 2 x_i.x_j, computed in row blocks
to bound memory. Exactness (no spatial index) keeps the graph from becoming
a confound when validating embeddings; all data sets of interest stay well
below the point where an index would pay off.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, KTooLarge, NonFiniteData

_BLOCK_ROWS = 512


@dataclass
class NeighborGraph:
    """Per-sample ordered neighbor lists.

    indices : (N, k) int array, row i holding the k nearest samples to i,
        closest first, self excluded, distance ties broken by ascending index.
    distances : (N, k) float array of matching Euclidean distances.
    """

    indices: np.ndarray
    distances: np.ndarray

    @property
    def n_samples(self):
        return self.indices.shape[0]

    @property
    def k(self):
        return self.indices.shape[1]


def knn_graph(x, k):
    """Build the exact Euclidean k-NN graph of a column-per-sample matrix.

    Parameters
    ----------
    x : (n, N) array
        One sample per column.
    k : int
        Neighbors per sample, 1 <= k <= N - 1.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] == 0:
        raise EmptyInput("need a non-empty (n, N) sample matrix")
    if not np.all(np.isfinite(x)):
        raise NonFiniteData("samples contain NaN or infinite values")
    n_samples = x.shape[1]
    if not 1 <= k <= n_samples - 1:
        raise KTooLarge(f"k={k} is outside [1, {n_samples - 1}] for {n_samples} samples")

    sq_norms = np.einsum("ij,ij->j", x, x)
    indices = np.empty((n_samples, k), dtype=np.int64)
    distances = np.empty((n_samples, k))
    for start in range(0, n_samples, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n_samples)
        d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (x[:, start:stop].T @ x)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        # Stable sort keeps ascending sample index among exact distance ties.
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return NeighborGraph(indices, distances)
