"""Dense symmetric eigensolvers.

Every embedding method in this package bottoms out in one of two solves: the
m smallest eigenpairs of a symmetric matrix, or of a symmetric-definite
pencil (A, B). The pencil is handled by ridge-stabilizing B, factoring it as
L L^T and reducing to a standard symmetric problem on L^-1 A L^-T. Dense
full decompositions are used throughout: problem orders here are at most a
few thousand, and dense solves are simpler and reproducible.

All functions are pure; results are deterministic for a fixed BLAS
configuration. Eigenvector signs are canonicalized so the largest-magnitude
entry of each vector is positive.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NonFiniteData,
    NonSymmetric,
    NotPositiveDefinite,
    TooManyRequested,
)

SYMMETRY_ATOL = 1e-12


@dataclass
class EigenPairs:
    """Eigenvalues in ascending order with matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.values)


def _check_symmetric(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteData(f"{name} contains non-finite entries")
    asym = np.abs(a - a.T).max() if a.size else 0.0
    if asym > SYMMETRY_ATOL:
        raise NonSymmetric(
            f"{name} is asymmetric by {asym:.3e} (tolerance {SYMMETRY_ATOL:.0e}); "
            "symmetrize it as (A + A.T) / 2 first"
        )
    return 0.5 * (a + a.T)


def _canonical_signs(vectors):
    # Flip each column so its largest-magnitude entry is positive.
    if vectors.size == 0:
        return vectors
    lead = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigs(a, m):
    """Return the m algebraically smallest eigenpairs of a symmetric matrix.

    Parameters
    ----------
    a : (d, d) array
        Symmetric matrix (asymmetry beyond 1e-12 absolute is rejected).
    m : int
        Number of eigenpairs, 1 <= m <= d.

    Returns
    -------
    EigenPairs
        Ascending eigenvalues; orthonormal eigenvector columns.
    """
    a = _check_symmetric(a, "A")
    d = a.shape[0]
    if not 1 <= m <= d:
        raise TooManyRequested(f"requested {m} eigenpairs from a matrix of order {d}")
    try:
        values, vectors = scipy.linalg.eigh(a)
    except scipy.linalg.LinAlgError as exc:
        raise NoConvergence(f"dense symmetric eigensolver failed: {exc}") from exc
    return EigenPairs(values[:m].copy(), _canonical_signs(vectors[:, :m].copy()))


def sym_generalized_eigs(a, b, m, ridge=1e-9):
    """Return the m smallest eigenpairs of the pencil (A, B'), B' ridge-stabilized.

    B' = B + ridge * (trace(B) / d) * I. The returned vectors satisfy
    v_i^T B' v_j = delta_ij. B is expected to be positive semidefinite; if its
    Cholesky factorization still fails after the ridge, NotPositiveDefinite is
    raised and the caller should retry with a larger ridge.

    Parameters
    ----------
    a, b : (d, d) arrays
        Symmetric matrices of equal order.
    m : int
        Number of eigenpairs, 1 <= m <= d.
    ridge : float
        Nonnegative relative regularization added to B's diagonal.
    """
    a = _check_symmetric(a, "A")
    b = _check_symmetric(b, "B")
    if a.shape != b.shape:
        raise DimensionMismatch(f"A has order {a.shape[0]} but B has order {b.shape[0]}")
    d = a.shape[0]
    if not 1 <= m <= d:
        raise TooManyRequested(f"requested {m} eigenpairs from a pencil of order {d}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")

    b_reg = b
    if ridge > 0:
        scale = np.trace(b) / d
        b_reg = b + (ridge * scale) * np.eye(d)
    try:
        lower = scipy.linalg.cholesky(b_reg, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            f"Cholesky factorization of the regularized B failed (ridge={ridge:g}); "
            "raise the ridge parameter"
        ) from exc

    # Reduce to the standard problem C = L^-1 A L^-T.
    half = scipy.linalg.solve_triangular(lower, a, lower=True)
    c = scipy.linalg.solve_triangular(lower, half.T, lower=True)
    c = 0.5 * (c + c.T)
    try:
        values, w = scipy.linalg.eigh(c)
    except scipy.linalg.LinAlgError as exc:
        raise NoConvergence(f"dense symmetric eigensolver failed: {exc}") from exc
    vectors = scipy.linalg.solve_triangular(lower, w[:, :m], trans="T", lower=True)
    return EigenPairs(values[:m].copy(), _canonical_signs(vectors))
