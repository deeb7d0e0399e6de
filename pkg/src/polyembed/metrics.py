"""Embedding quality and timing measurement.

Residual variance rho = 1 - R^2, with R a Pearson correlation between an
embedding Y and reference coordinates Z. The default "distance" variant
correlates the upper triangles of the two pairwise Euclidean distance
matrices, which is invariant to rotation, reflection and translation of
either input; the literal "entries" variant correlates raw matrix entries
after per-coordinate sign alignment and is kept for strict replication of
results that used it.

Timing measures the wall-clock cost of model.transform over growing batch
sizes, pinned to a single BLAS thread; medians over repeated runs are
reported and a warm-up call is excluded. Concurrent load on the machine
invalidates the numbers.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist
from threadpoolctl import threadpool_limits

from .errors import ConfigError, DegenerateVariance, DimensionMismatch

DISTANCE = "distance"
ENTRIES = "entries"
VARIANTS = (DISTANCE, ENTRIES)


@dataclass
class ResidualVarianceReport:
    rho: float
    variant: str
    n_samples: int


@dataclass
class TimingReport:
    """Median wall times (seconds) per transform batch."""

    batch_sizes: list
    seconds: list
    method: str

    @property
    def per_sample(self):
        return [t / b if b else float("nan") for t, b in zip(self.seconds, self.batch_sizes)]


def _pearson(u, v):
    u = u - u.mean()
    v = v - v.mean()
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVariance("correlation is undefined: an input has zero variance")
    return float((u @ v) / (nu * nv))


def residual_variance(y, z, variant=DISTANCE):
    """Residual variance 1 - R^2 between embedding y and reference z.

    Both inputs are column-per-sample matrices over the same samples. The
    entries variant additionally requires equal coordinate counts.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if y.shape[1] != z.shape[1]:
        raise DimensionMismatch(
            f"embedding has {y.shape[1]} samples but the reference has {z.shape[1]}"
        )
    n = y.shape[1]
    if variant == DISTANCE:
        if n < 2:
            raise DegenerateVariance("need at least two samples to compare distances")
        r = _pearson(pdist(y.T), pdist(z.T))
    elif variant == ENTRIES:
        if y.shape[0] != z.shape[0]:
            raise DimensionMismatch(
                f"entries variant needs matching coordinate counts, "
                f"got {y.shape[0]} and {z.shape[0]}"
            )
        aligned = y.copy()
        for j in range(y.shape[0]):
            yj = y[j] - y[j].mean()
            zj = z[j] - z[j].mean()
            if yj @ zj < 0:
                aligned[j] = -aligned[j]
        r = _pearson(aligned.ravel(), z.ravel())
    else:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    rho = 1.0 - r * r
    return ResidualVarianceReport(min(max(rho, 0.0), 1.0), variant, n)


def time_transform(model, x_test, batch_sizes, repeats=5):
    """Median per-batch wall time of model.transform, single-threaded.

    batch_sizes must be strictly increasing and no larger than the number of
    available test samples. Each batch is the leading slice of x_test; every
    batch is transformed once for warm-up, then `repeats` timed runs are
    taken and the median reported.
    """
    x_test = np.asarray(x_test, dtype=float)
    batch_sizes = [int(b) for b in batch_sizes]
    if any(b2 <= b1 for b1, b2 in zip(batch_sizes, batch_sizes[1:])):
        raise ConfigError("batch sizes must be strictly increasing")
    if batch_sizes and batch_sizes[-1] > x_test.shape[1]:
        raise ConfigError(
            f"largest batch ({batch_sizes[-1]}) exceeds the "
            f"{x_test.shape[1]} available test samples"
        )
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")

    medians = []
    with threadpool_limits(limits=1):
        for batch in batch_sizes:
            chunk = x_test[:, :batch]
            model.transform(chunk)  # warm-up, excluded
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                model.transform(chunk)
                times.append(time.perf_counter() - start)
            medians.append(float(np.median(times)))
    return TimingReport(batch_sizes, medians, getattr(model, "kind", "unknown"))
