"""Synthetic manifold generators and matrix file I/O.

Generators return index-aligned ambient coordinates X (3 x N) and generating
coordinates Z (2 x N) with x_i = phi(z_i). All randomness comes from
numpy's PCG64 bit generator seeded directly with the given seed, drawing
uniform doubles in a fixed order, so outputs are bitwise reproducible across
runs and platforms.

File formats: CSV with one sample per row (header optional, floats written
in shortest round-trip form), and the "PEMB" binary format: magic bytes
b"PEMB", little-endian u32 row and column counts, then rows*cols
little-endian float64 values in column-major order.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, ParseError, ShapeError

SWISS_ROLL = "swissroll"
SWISS_HOLE = "swisshole"
GAUSSIAN = "gaussian"
GENERATORS = (SWISS_ROLL, SWISS_HOLE, GAUSSIAN)

ROLL_ANGLE_MIN = 1.5 * math.pi
ROLL_ANGLE_MAX = 4.5 * math.pi
ROLL_HEIGHT = 21.0
HOLE_ANGLE = (9.0, 12.0)
HOLE_HEIGHT = (9.0, 14.0)
BUMP_AMPLITUDE = 1.0
BUMP_SIGMA = 0.45

_PEMB_MAGIC = b"PEMB"


@dataclass
class SyntheticSample:
    """Ambient samples x (3, N), generating coordinates z (2, N), name, seed."""

    x: np.ndarray
    z: np.ndarray
    name: str
    seed: int


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _roll_surface(t, h):
    return np.vstack([t * np.cos(t), h, t * np.sin(t)])


def swiss_roll(n, seed=0):
    """Swiss roll: t uniform on [3pi/2, 9pi/2], h uniform on [0, 21]."""
    if n < 1:
        raise EmptyInput("need at least one sample")
    rng = _rng(seed)
    t = ROLL_ANGLE_MIN * (1.0 + 2.0 * rng.random(n))
    h = ROLL_HEIGHT * rng.random(n)
    return SyntheticSample(_roll_surface(t, h), np.vstack([t, h]), SWISS_ROLL, seed)


def swiss_hole(n, seed=0):
    """Swiss roll with the rectangle t in [9, 12], h in [9, 14] rejected."""
    if n < 1:
        raise EmptyInput("need at least one sample")
    rng = _rng(seed)
    t = np.empty(n)
    h = np.empty(n)
    filled = 0
    while filled < n:
        u = rng.random(2)
        cand_t = ROLL_ANGLE_MIN * (1.0 + 2.0 * u[0])
        cand_h = ROLL_HEIGHT * u[1]
        if (
            HOLE_ANGLE[0] <= cand_t <= HOLE_ANGLE[1]
            and HOLE_HEIGHT[0] <= cand_h <= HOLE_HEIGHT[1]
        ):
            continue
        t[filled] = cand_t
        h[filled] = cand_h
        filled += 1
    return SyntheticSample(_roll_surface(t, h), np.vstack([t, h]), SWISS_HOLE, seed)


def gaussian_bump(n, seed=0):
    """Gaussian bump over [-1, 1]^2: x3 = exp(-(z1^2 + z2^2) / (2 * 0.45^2))."""
    if n < 1:
        raise EmptyInput("need at least one sample")
    rng = _rng(seed)
    z = 2.0 * rng.random((2, n)) - 1.0
    height = BUMP_AMPLITUDE * np.exp(-(z[0] ** 2 + z[1] ** 2) / (2.0 * BUMP_SIGMA**2))
    return SyntheticSample(np.vstack([z[0], z[1], height]), z, GAUSSIAN, seed)


_GENERATOR_FUNCS = {SWISS_ROLL: swiss_roll, SWISS_HOLE: swiss_hole, GAUSSIAN: gaussian_bump}


def generate(name, n, seed=0):
    """Dispatch a generator by its CLI name."""
    if name not in _GENERATOR_FUNCS:
        raise ValueError(f"unknown generator {name!r}; choose from {GENERATORS}")
    return _GENERATOR_FUNCS[name](n, seed)


def split_indices(n, fraction, seed=0):
    """Deterministic train/test index partition.

    Permutes range(n) under the seed and takes the first round(fraction * n)
    indices for training, the rest for testing.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"split fraction must be in [0, 1], got {fraction}")
    perm = _rng(seed).permutation(n)
    n_train = int(round(fraction * n))
    return perm[:n_train].copy(), perm[n_train:].copy()


def save_matrix(path, matrix, fmt="csv"):
    """Write a column-per-sample matrix; CSV rows are samples."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {matrix.shape}")
    if fmt == "csv":
        with open(path, "w", encoding="ascii") as fh:
            for col in range(matrix.shape[1]):
                fh.write(",".join(repr(float(v)) for v in matrix[:, col]))
                fh.write("\n")
    elif fmt == "pemb":
        rows, cols = matrix.shape
        with open(path, "wb") as fh:
            fh.write(_PEMB_MAGIC)
            fh.write(struct.pack("<II", rows, cols))
            fh.write(np.asarray(matrix, dtype="<f8").tobytes(order="F"))
    else:
        raise ValueError(f"unknown format {fmt!r}; choose 'csv' or 'pemb'")


def load_matrix(path, fmt="csv"):
    """Read a matrix back into column-per-sample layout."""
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "pemb":
        return _load_pemb(path)
    raise ValueError(f"unknown format {fmt!r}; choose 'csv' or 'pemb'")


def _parse_csv_row(line, line_no):
    fields = line.split(",")
    row = np.empty(len(fields))
    for col, field in enumerate(fields):
        try:
            row[col] = float(field)
        except ValueError:
            raise ParseError(
                f"could not parse {field.strip()!r} as a number", line=line_no, column=col + 1
            ) from None
    return row


def _load_csv(path):
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line_no == 1 and not rows:
                # Header rows are permitted: skip the first line if any field
                # fails to parse as a number.
                try:
                    rows.append(_parse_csv_row(line, line_no))
                except ParseError:
                    continue
                width = len(rows[0])
                continue
            row = _parse_csv_row(line, line_no)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ShapeError(
                    f"row has {len(row)} values but previous rows have {width}", line=line_no
                )
            rows.append(row)
    if not rows:
        raise EmptyInput(f"no data rows in {path}")
    return np.vstack(rows).T


def _load_pemb(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _PEMB_MAGIC:
        raise ParseError(f"{path} does not start with the PEMB magic bytes", line=None)
    if len(data) < 12:
        raise ParseError(f"{path} is truncated before the header", line=None)
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + rows * cols * 8
    if len(data) != expected:
        raise ShapeError(
            f"{path} holds {len(data)} bytes but a {rows}x{cols} matrix needs {expected}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=12)
    return values.reshape((rows, cols), order="F").copy()
