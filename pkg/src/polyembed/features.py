"""Polynomial feature lifting.

Maps a sample x in R^n to its stacked monomial features, highest degree
block first, down to the degree-1 block (there is no constant term). Two
modes:

- kronecker: the degree-q block is the q-fold Kronecker power of x, length
  n^q, in lexicographic index order and including duplicate monomials
  (x1*x2 and x2*x1 both appear). Lifted dimension: sum of n^q for q=1..p.
- hadamard: the degree-q block is the entrywise q-th power of x, length n;
  the crosswise terms are dropped. Lifted dimension: n*p.

Optional centering subtracts a stored mean before lifting; fitting computes
the mean from the training matrix and transform reuses it.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LiftCapExceeded, NonFiniteData

KRONECKER = "kronecker"
HADAMARD = "hadamard"
MODES = (KRONECKER, HADAMARD)

DEFAULT_DIM_CAP = 100_000


@dataclass
class LiftConfig:
    """Lifting configuration shared between fit and transform.

    mean is filled by expand_matrix when center is on; it must be present
    before expand can be applied to new samples.
    """

    n: int
    p: int
    mode: str = HADAMARD
    center: bool = True
    mean: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"input dimension must be >= 1, got {self.n}")
        if self.p < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {self.p}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mean is not None:
            if not self.center:
                raise ValueError("mean is only stored when centering is enabled")
            self.mean = np.asarray(self.mean, dtype=float)
            if self.mean.shape != (self.n,):
                raise DimensionMismatch(
                    f"mean has shape {self.mean.shape}, expected ({self.n},)"
                )

    @property
    def lifted_dim(self):
        return lifted_dim(self.n, self.p, self.mode)


def lifted_dim(n, p, mode, dim_cap=DEFAULT_DIM_CAP):
    """Lifted feature dimension: sum(n^q, q=1..p) for kronecker, n*p for hadamard.

    Raises LiftCapExceeded when the result would exceed dim_cap (guards the
    exponential Kronecker growth).
    """
    if n < 1 or p < 1:
        raise ValueError("need n >= 1 and p >= 1")
    if mode == KRONECKER:
        total = sum(n**q for q in range(1, p + 1))
    elif mode == HADAMARD:
        total = n * p
    else:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if total > dim_cap:
        raise LiftCapExceeded(
            f"lifted dimension {total} exceeds the cap of {dim_cap} "
            f"(n={n}, p={p}, mode={mode})"
        )
    return total


def _degree_blocks(columns, p, mode):
    # columns: (n, N) already centered; returns blocks from degree p down to 1.
    # Both modes build degree q from degree q-1 by one multiplication with the
    # degree-1 block, so for n = 1 the two lifts agree bit for bit.
    powers = [columns]
    if mode == KRONECKER:
        for _ in range(p - 1):
            prev = powers[-1]
            nxt = (prev[:, None, :] * columns[None, :, :]).reshape(-1, columns.shape[1])
            powers.append(nxt)
    else:
        for _ in range(p - 1):
            powers.append(powers[-1] * columns)
    return powers[::-1]


def expand(x, cfg):
    """Lift a single sample to its monomial feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.n,):
        raise DimensionMismatch(f"sample has shape {x.shape}, expected ({cfg.n},)")
    if cfg.center and cfg.mean is None:
        raise ValueError("centering is enabled but no mean is stored; lift the training matrix first")
    return expand_matrix(x.reshape(cfg.n, 1), cfg)[:, 0]


def expand_matrix(x, cfg, dim_cap=DEFAULT_DIM_CAP):
    """Lift a column-per-sample matrix to the (d, N) lifted feature matrix.

    When centering is enabled and no mean is stored yet, the sample mean of
    x is computed and stored on cfg.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != cfg.n:
        raise DimensionMismatch(
            f"data matrix has shape {x.shape}, expected ({cfg.n}, N)"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteData("samples contain NaN or infinite values")
    lifted_dim(cfg.n, cfg.p, cfg.mode, dim_cap=dim_cap)

    if cfg.center:
        if cfg.mean is None:
            if x.shape[1] == 0:
                raise DimensionMismatch("cannot compute a centering mean from zero samples")
            cfg.mean = x.mean(axis=1)
        x = x - cfg.mean[:, None]
    return np.vstack(_degree_blocks(x, cfg.p, cfg.mode))
