"""Polynomial neighborhood-preserving embeddings with explicit maps.

Spectral embeddings in the locally-linear-embedding family answer "where do
the training samples go" but not "where does a new sample go". This package
fits an explicit polynomial map alongside the embedding, so out-of-sample
points are located by evaluating the map instead of refitting.

Quick start::

    from polyembed import datasets, fit_nppe, residual_variance

    sample = datasets.swiss_roll(1000, seed=0)
    model, result = fit_nppe(sample.x, k=10, p=2, m=2)
    rho = residual_variance(result.y, sample.x).rho
    y_new = model.transform(datasets.swiss_roll(200, seed=1).x)
"""

from . import datasets
from .embed import (
    EmbeddingResult,
    LinearModel,
    PolynomialModel,
    fit_lle,
    fit_nppe,
    fit_npp,
    fit_onpp,
    lle_from_alignment,
    load_model,
    resolve_k,
    save_model,
    transform,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateSpectrum,
    DegenerateVariance,
    DimensionMismatch,
    EmptyInput,
    GraphMismatch,
    KTooLarge,
    LiftCapExceeded,
    NoConvergence,
    NonFiniteData,
    NonSymmetric,
    NotPositiveDefinite,
    NumericalError,
    ParseError,
    PolyembedError,
    ShapeError,
    SingularGram,
    TooManyRequested,
)
from .features import HADAMARD, KRONECKER, LiftConfig, expand, expand_matrix, lifted_dim
from .linalg import EigenPairs, sym_eigs, sym_generalized_eigs
from .lle_weights import (
    AlignmentMatrix,
    ReconstructionWeights,
    alignment_matrix,
    reconstruction_weights,
)
from .metrics import (
    ResidualVarianceReport,
    TimingReport,
    residual_variance,
    time_transform,
)
from .neighbors import NeighborGraph, knn_graph

__version__ = "0.1.0"

__all__ = [
    "AlignmentMatrix",
    "ConfigError",
    "DataError",
    "DegenerateSpectrum",
    "DegenerateVariance",
    "DimensionMismatch",
    "EigenPairs",
    "EmbeddingResult",
    "EmptyInput",
    "GraphMismatch",
    "HADAMARD",
    "KRONECKER",
    "KTooLarge",
    "LiftCapExceeded",
    "LiftConfig",
    "LinearModel",
    "NeighborGraph",
    "NoConvergence",
    "NonFiniteData",
    "NonSymmetric",
    "NotPositiveDefinite",
    "NumericalError",
    "ParseError",
    "PolyembedError",
    "PolynomialModel",
    "ReconstructionWeights",
    "ResidualVarianceReport",
    "ShapeError",
    "SingularGram",
    "TimingReport",
    "TooManyRequested",
    "alignment_matrix",
    "datasets",
    "expand",
    "expand_matrix",
    "fit_lle",
    "fit_nppe",
    "fit_npp",
    "fit_onpp",
    "knn_graph",
    "lifted_dim",
    "lle_from_alignment",
    "load_model",
    "reconstruction_weights",
    "residual_variance",
    "resolve_k",
    "save_model",
    "sym_eigs",
    "sym_generalized_eigs",
    "time_transform",
    "transform",
]
