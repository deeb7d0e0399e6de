"""Local reconstruction weights and the spectral alignment matrix.

Each sample is expressed as an affine combination of its k nearest
neighbors; the weight rows form a sparse row-stochastic matrix R. The
alignment matrix M = (I - R)^T (I - R) is what every embedding method in
this package minimizes over, paired with unit diagonal weights D.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import GraphMismatch, SingularGram


@dataclass
class ReconstructionWeights:
    """Sparse affine reconstruction weights, one row per sample.

    indices : (N, k) neighbor indices (same layout as the NeighborGraph).
    values : (N, k) weights; each row sums to 1.
    """

    indices: np.ndarray
    values: np.ndarray

    @property
    def n_samples(self):
        return self.indices.shape[0]

    @property
    def k(self):
        return self.indices.shape[1]

    def to_sparse(self):
        """Row-compressed N x N weight matrix."""
        n, k = self.indices.shape
        indptr = np.arange(0, n * k + 1, k)
        return scipy.sparse.csr_matrix(
            (self.values.ravel().copy(), self.indices.ravel().copy(), indptr), shape=(n, n)
        )


@dataclass
class AlignmentMatrix:
    """Symmetric PSD alignment matrix M with diagonal weights D (all ones)."""

    m: scipy.sparse.csr_matrix
    d: np.ndarray

    def dense(self):
        return self.m.toarray()


def reconstruction_weights(x, graph, reg=1e-3):
    """Solve the constrained local least-squares weights for every sample.

    For sample i with neighbors j, builds the local Gram matrix
    G_jl = (x_j - x_i)^T (x_l - x_i), conditions it as
    G' = G + reg * trace(G) * I (or reg * I when the trace vanishes), and
    solves G' w = 1 normalized to sum 1, the closed form of the
    sum-to-one-constrained minimum of ||x_i - sum_j w_j x_j||^2. When G' is
    exactly singular (possible with reg = 0) the constrained minimum is
    computed from its stationarity system instead, and SingularGram is
    raised only if that system is degenerate too.

    Parameters
    ----------
    x : (n, N) array
        Samples the graph was built from.
    graph : NeighborGraph
    reg : float
        Nonnegative Gram ridge, relative to trace(G). The default 1e-3 keeps
        G' invertible when k exceeds the input dimension.
    """
    x = np.asarray(x, dtype=float)
    n_samples = x.shape[1]
    if graph.n_samples != n_samples:
        raise GraphMismatch(
            f"graph has {graph.n_samples} samples but the data matrix has {n_samples}"
        )
    if graph.indices.min(initial=0) < 0 or graph.indices.max(initial=-1) >= n_samples:
        raise GraphMismatch("graph neighbor indices out of range for the data matrix")
    if reg < 0:
        raise ValueError("reg must be nonnegative")

    k = graph.k
    eye = np.eye(k)
    values = np.empty((n_samples, k))
    for i in range(n_samples):
        diffs = x[:, graph.indices[i]] - x[:, i : i + 1]
        gram = diffs.T @ diffs
        gram = 0.5 * (gram + gram.T)
        if reg > 0:
            trace = gram.trace()
            gram = gram + (reg * trace if trace > 0 else reg) * eye
        try:
            factor = scipy.linalg.cho_factor(gram, lower=True)
            w = scipy.linalg.cho_solve(factor, np.ones(k))
        except scipy.linalg.LinAlgError:
            w = _constrained_weights(gram, i)
        total = w.sum()
        if not np.isfinite(total) or total == 0.0:
            raise SingularGram(
                f"weights of sample {i} could not be normalized (raise reg)", sample_index=i
            )
        values[i] = w / total
    return ReconstructionWeights(graph.indices.copy(), values)


def _constrained_weights(gram, sample_index):
    # Exactly singular Gram (collinear or duplicate neighbors with reg = 0):
    # the closed form G^-1 1 is unavailable, but the sum-to-one constrained
    # minimum can still be unique. Solve its stationarity system directly.
    k = gram.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * gram
    kkt[:k, k] = -1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        solution = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(
            f"local Gram matrix of sample {sample_index} is singular (raise reg)",
            sample_index=sample_index,
        ) from exc
    if not np.all(np.isfinite(solution)):
        raise SingularGram(
            f"local Gram matrix of sample {sample_index} is singular (raise reg)",
            sample_index=sample_index,
        )
    return solution[:k]


def alignment_matrix(r):
    """Return M = (I - R)^T (I - R) and the unit diagonal weights D.

    Equivalently M = D - W in the spectral-embedding framework, with
    W = R + R^T - R^T R.
    """
    r_sparse = r.to_sparse()
    i_minus_r = scipy.sparse.identity(r.n_samples, format="csr") - r_sparse
    m = (i_minus_r.T @ i_minus_r).tocsr()
    m = ((m + m.T) * 0.5).tocsr()
    return AlignmentMatrix(m, np.ones(r.n_samples))
