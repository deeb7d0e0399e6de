"""Embedding model fitting, out-of-sample transformation, and model files.

Four methods share one pipeline: build the k-NN graph, solve the local
reconstruction weights, and minimize the alignment objective over a family
of maps. The family is what distinguishes them:

- fit_nppe: polynomial maps via monomial feature lifting (kronecker mode is
  the full lift, hadamard mode the simplified per-coordinate one). Solves
  the pencil (X_p M X_p^T, X_p X_p^T) and keeps the coefficient vectors, so
  new samples are located by lifting and projecting, with no refitting.
- fit_npp: linear maps y = U^T x; same pencil with the raw data matrix.
- fit_onpp: linear maps with an orthonormal U; a standard symmetric solve
  on X M X^T.
- fit_lle: free coordinates (no map); the small eigenvectors of M itself.

The generalized solves request a few eigenpairs beyond m and drop candidates
whose coordinate variance across training samples is negligible; those are
ridge artifacts or near-constant directions, the analogue of LLE's discarded
constant eigenvector. Output coordinates are sign-flipped so the first
training sample's deviation from the coordinate mean is positive, which
makes runs reproducible.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import (
    ConfigError,
    DegenerateSpectrum,
    DimensionMismatch,
    NonFiniteData,
    ParseError,
    TooManyRequested,
)
from .features import HADAMARD, LiftConfig, expand_matrix
from .features import DEFAULT_DIM_CAP
from .lle_weights import alignment_matrix, reconstruction_weights
from .linalg import sym_eigs, sym_generalized_eigs
from .neighbors import knn_graph

DEFAULT_REG = 1e-3
DEFAULT_RIDGE = 1e-9
DEFAULT_EXTRA_PAIRS = 5
VARIANCE_DROP_REL = 1e-10
MODEL_FORMAT_VERSION = 1


@dataclass
class EmbeddingResult:
    """Training coordinates y (m, N) with eigenvalues and a method tag."""

    y: np.ndarray
    eigenvalues: np.ndarray
    method: str


@dataclass
class PolynomialModel:
    """Explicit polynomial map: y = coeffs^T * lift(x - mean)."""

    lift: LiftConfig
    coeffs: np.ndarray
    eigenvalues: np.ndarray
    ridge: float
    reg: float
    n_train: int
    k: int

    kind = "nppe"

    @property
    def n_components(self):
        return self.coeffs.shape[1]

    def transform(self, x_new):
        """Map new column-per-sample data into the embedding space."""
        x_new = _as_data(x_new, allow_empty=True)
        if x_new.shape[0] != self.lift.n:
            raise DimensionMismatch(
                f"model expects input dimension {self.lift.n} "
                f"but got dimension {x_new.shape[0]}"
            )
        return self.coeffs.T @ expand_matrix(x_new, self.lift)

    def to_dict(self):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "lift": {
                "n": self.lift.n,
                "p": self.lift.p,
                "mode": self.lift.mode,
                "center": self.lift.center,
                "mean": None if self.lift.mean is None else self.lift.mean.tolist(),
            },
            "coeffs": _matrix_to_dict(self.coeffs),
            "eigenvalues": self.eigenvalues.tolist(),
            "ridge": self.ridge,
            "reg": self.reg,
            "training": {"n_samples": self.n_train, "k": self.k},
        }


@dataclass
class LinearModel:
    """Linear projection map y = projection^T * x (kind 'npp' or 'onpp')."""

    projection: np.ndarray
    kind: str
    eigenvalues: np.ndarray
    ridge: float | None
    reg: float
    n_train: int
    k: int

    @property
    def n_components(self):
        return self.projection.shape[1]

    def transform(self, x_new):
        x_new = _as_data(x_new, allow_empty=True)
        if x_new.shape[0] != self.projection.shape[0]:
            raise DimensionMismatch(
                f"model expects input dimension {self.projection.shape[0]} "
                f"but got dimension {x_new.shape[0]}"
            )
        return self.projection.T @ x_new

    def to_dict(self):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "coeffs": _matrix_to_dict(self.projection),
            "eigenvalues": self.eigenvalues.tolist(),
            "ridge": self.ridge,
            "reg": self.reg,
            "training": {"n_samples": self.n_train, "k": self.k},
        }


def _matrix_to_dict(m):
    return {"rows": m.shape[0], "cols": m.shape[1], "data": m.ravel(order="C").tolist()}


def _matrix_from_dict(doc):
    data = np.asarray(doc["data"], dtype=float)
    return data.reshape((doc["rows"], doc["cols"]), order="C")


def _as_data(x, allow_empty=False):
    x = np.ascontiguousarray(np.asarray(x, dtype=float))
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a (n, N) column-per-sample matrix, got shape {x.shape}")
    if x.shape[1] == 0 and not allow_empty:
        raise DimensionMismatch("need at least one sample")
    if not np.all(np.isfinite(x)):
        raise NonFiniteData("samples contain NaN or infinite values")
    return x


def resolve_k(n_samples, k=None):
    """Default neighbor count: 1% of the training samples, at least 2."""
    if k is None:
        k = max(2, int(round(0.01 * n_samples)))
    return k


def _i_minus_r(weights):
    return scipy.sparse.identity(weights.n_samples, format="csr") - weights.to_sparse()


def _alignment_quadratic(i_minus_r, feats):
    # X_p M X_p^T formed as E^T E with E = (I - R) X_p^T, keeping it PSD.
    e = i_minus_r @ feats.T
    a = e.T @ e
    return 0.5 * (a + a.T)


def _gram(feats):
    b = feats @ feats.T
    return 0.5 * (b + b.T)


def _canonicalize_rows(y, columns=None):
    # Flip coordinates so the first sample's deviation from the mean is >= 0.
    if y.shape[1] == 0:
        return
    flip = (y[:, 0] - y.mean(axis=1)) < 0
    y[flip] *= -1.0
    if columns is not None:
        columns[:, flip] *= -1.0


def _select_coordinates(pairs, coords, m):
    # Drop candidates with negligible coordinate variance (ridge artifacts and
    # near-constant directions), keep the first m survivors.
    variances = coords.var(axis=1)
    keep = variances >= VARIANCE_DROP_REL * variances.mean()
    survivors = np.flatnonzero(keep)
    if survivors.size < m:
        raise DegenerateSpectrum(
            f"only {survivors.size} of {len(pairs)} candidate eigenpairs are usable "
            f"but {m} coordinates were requested; raise ridge, lower m, or increase k"
        )
    return survivors[:m]


def _fit_pencil(x, feats, k, m, reg, ridge, extra_pairs):
    graph = knn_graph(x, k)
    weights = reconstruction_weights(x, graph, reg)
    a = _alignment_quadratic(_i_minus_r(weights), feats)
    b = _gram(feats)
    d = feats.shape[0]
    if m > d:
        raise TooManyRequested(f"requested {m} coordinates from a lifted dimension of {d}")
    n_solve = min(m + extra_pairs, d)
    pairs = sym_generalized_eigs(a, b, n_solve, ridge)
    coords = pairs.vectors.T @ feats
    selected = _select_coordinates(pairs, coords, m)
    coeffs = pairs.vectors[:, selected].copy()
    values = pairs.values[selected].copy()
    y = coeffs.T @ feats
    _canonicalize_rows(y, coeffs)
    # Recompute so training coordinates match transform() bit for bit.
    y = coeffs.T @ feats
    return coeffs, values, y


def fit_nppe(
    x,
    k=None,
    p=2,
    mode=HADAMARD,
    m=2,
    *,
    reg=DEFAULT_REG,
    ridge=DEFAULT_RIDGE,
    center=True,
    extra_pairs=DEFAULT_EXTRA_PAIRS,
    dim_cap=DEFAULT_DIM_CAP,
):
    """Fit the polynomial embedding and its explicit map.

    Parameters
    ----------
    x : (n, N) array
        Training samples, one per column.
    k : int, optional
        Neighbors per sample; defaults to 1% of N (at least 2).
    p : int
        Polynomial degree.
    mode : str
        "hadamard" (per-coordinate powers, the simplified variant) or
        "kronecker" (the full monomial lift).
    m : int
        Output dimensionality.
    reg : float
        Gram ridge for the reconstruction weights.
    ridge : float
        Relative ridge stabilizing the right-hand pencil matrix.
    center : bool
        Subtract the training mean before lifting (stored in the model).
    extra_pairs : int
        Extra eigenpair candidates solved beyond m before filtering.
    dim_cap : int
        Upper bound on the lifted dimension.

    Returns
    -------
    (PolynomialModel, EmbeddingResult)
    """
    x = _as_data(x)
    n, n_samples = x.shape
    k = resolve_k(n_samples, k)
    cfg = LiftConfig(n=n, p=p, mode=mode, center=center)
    feats = expand_matrix(x, cfg, dim_cap=dim_cap)
    coeffs, values, y = _fit_pencil(x, feats, k, m, reg, ridge, extra_pairs)
    model = PolynomialModel(
        lift=cfg,
        coeffs=coeffs,
        eigenvalues=values,
        ridge=ridge,
        reg=reg,
        n_train=n_samples,
        k=k,
    )
    return model, EmbeddingResult(y, values.copy(), "nppe")


def fit_npp(
    x,
    k=None,
    m=2,
    *,
    reg=DEFAULT_REG,
    ridge=DEFAULT_RIDGE,
    extra_pairs=DEFAULT_EXTRA_PAIRS,
):
    """Fit the linear neighborhood-preserving projection baseline."""
    x = _as_data(x)
    k = resolve_k(x.shape[1], k)
    coeffs, values, y = _fit_pencil(x, x, k, m, reg, ridge, extra_pairs)
    model = LinearModel(
        projection=coeffs,
        kind="npp",
        eigenvalues=values,
        ridge=ridge,
        reg=reg,
        n_train=x.shape[1],
        k=k,
    )
    return model, EmbeddingResult(y, values.copy(), "npp")


def fit_onpp(x, k=None, m=2, *, reg=DEFAULT_REG):
    """Fit the orthogonal linear baseline: U^T U = I on X M X^T."""
    x = _as_data(x)
    n, n_samples = x.shape
    k = resolve_k(n_samples, k)
    graph = knn_graph(x, k)
    weights = reconstruction_weights(x, graph, reg)
    a = _alignment_quadratic(_i_minus_r(weights), x)
    pairs = sym_eigs(a, m)
    projection = pairs.vectors.copy()
    y = projection.T @ x
    _canonicalize_rows(y, projection)
    y = projection.T @ x
    model = LinearModel(
        projection=projection,
        kind="onpp",
        eigenvalues=pairs.values.copy(),
        ridge=None,
        reg=reg,
        n_train=n_samples,
        k=k,
    )
    return model, EmbeddingResult(y, pairs.values.copy(), "onpp")


def fit_lle(
    x,
    k=None,
    m=2,
    *,
    reg=DEFAULT_REG,
    extra_pairs=DEFAULT_EXTRA_PAIRS,
):
    """Plain locally linear embedding (no out-of-sample map)."""
    x = _as_data(x)
    k = resolve_k(x.shape[1], k)
    graph = knn_graph(x, k)
    weights = reconstruction_weights(x, graph, reg)
    m_dense = alignment_matrix(weights).dense()
    return lle_from_alignment(m_dense, m, extra_pairs=extra_pairs)


def lle_from_alignment(m_dense, m, extra_pairs=DEFAULT_EXTRA_PAIRS):
    """Embed from an alignment matrix directly.

    Discards near-constant eigenvectors (the trivial all-ones direction) and
    scales the survivors so the coordinates have unit covariance.
    """
    m_dense = np.asarray(m_dense, dtype=float)
    n_samples = m_dense.shape[0]
    n_solve = min(m + 1 + extra_pairs, n_samples)
    pairs = sym_eigs(m_dense, n_solve)
    coords = pairs.vectors.T.copy()
    variances = coords.var(axis=1)
    keep = variances >= VARIANCE_DROP_REL * variances.mean()
    if keep.all():
        raise DegenerateSpectrum(
            "the alignment matrix has no constant null direction, so its small "
            "eigenvectors carry no neighborhood structure; check that the "
            "reconstruction weight rows sum to 1"
        )
    survivors = np.flatnonzero(keep)
    if survivors.size < m:
        raise DegenerateSpectrum(
            f"only {survivors.size} usable eigenpairs of {n_solve} candidates; "
            "lower m or increase k"
        )
    selected = survivors[:m]
    y = coords[selected] * np.sqrt(n_samples)
    _canonicalize_rows(y)
    return EmbeddingResult(y, pairs.values[selected].copy(), "lle")


def transform(model, x_new):
    """Out-of-sample mapping; delegates to the model."""
    return model.transform(x_new)


def save_model(model, path):
    """Write a model as a self-describing JSON document."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path):
    """Load a model written by save_model."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"{path} is not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno
            ) from None
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {version!r} in {path}")
    kind = doc.get("kind")
    training = doc.get("training", {})
    if kind == "nppe":
        lift_doc = doc["lift"]
        lift = LiftConfig(
            n=lift_doc["n"],
            p=lift_doc["p"],
            mode=lift_doc["mode"],
            center=lift_doc["center"],
            mean=lift_doc["mean"],
        )
        return PolynomialModel(
            lift=lift,
            coeffs=_matrix_from_dict(doc["coeffs"]),
            eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
            ridge=doc["ridge"],
            reg=doc["reg"],
            n_train=training.get("n_samples", 0),
            k=training.get("k", 0),
        )
    if kind in ("npp", "onpp"):
        return LinearModel(
            projection=_matrix_from_dict(doc["coeffs"]),
            kind=kind,
            eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
            ridge=doc["ridge"],
            reg=doc["reg"],
            n_train=training.get("n_samples", 0),
            k=training.get("k", 0),
        )
    if kind == "lle":
        raise ConfigError(
            "lle embeddings have no out-of-sample map; fit nppe, npp, or onpp "
            "to transform new samples"
        )
    raise ParseError(f"unknown model kind {kind!r} in {path}")
