"""Exception hierarchy.

Three families, matching the CLI exit-code contract: configuration errors
(bad parameters, exit 2), data errors (unreadable or malformed inputs,
exit 3) and numerical errors (a solve that cannot be completed, exit 4).
"""


class PolyembedError(Exception):
    """Base class for all library errors."""


class ConfigError(PolyembedError):
    """A parameter is invalid or inconsistent with the data."""


class KTooLarge(ConfigError):
    """Requested neighbor count k is not in [1, n_samples - 1]."""


class TooManyRequested(ConfigError):
    """More eigenpairs requested than the matrix order allows."""


class DimensionMismatch(ConfigError):
    """Operands have incompatible dimensions."""


class LiftCapExceeded(ConfigError):
    """Lifted feature dimension exceeds the configured cap."""


class GraphMismatch(ConfigError):
    """Neighbor graph does not match the data it is used with."""


class DataError(PolyembedError):
    """Input data is missing, malformed, or unusable."""


class ParseError(DataError):
    """A file could not be parsed; carries line and column context."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ShapeError(DataError):
    """Rows of a matrix file disagree in length; carries the line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message + (f" (line {line})" if line is not None else ""))


class EmptyInput(DataError):
    """A data matrix with zero samples where at least one is required."""


class NonFiniteData(DataError):
    """Input contains NaN or infinite entries."""


class NumericalError(PolyembedError):
    """A numerical procedure failed to produce a valid result."""


class NonSymmetric(NumericalError):
    """Matrix asymmetry exceeds the symmetric-solver tolerance."""


class NoConvergence(NumericalError):
    """The eigensolver did not converge."""


class NotPositiveDefinite(NumericalError):
    """Factorization of the (regularized) right-hand matrix failed.

    Raising the ridge parameter usually fixes this.
    """


class SingularGram(NumericalError):
    """A local Gram system is singular even after conditioning."""

    def __init__(self, message, sample_index=None):
        self.sample_index = sample_index
        super().__init__(message)


class DegenerateSpectrum(NumericalError):
    """Fewer usable eigenpairs than output coordinates requested.

    Raising the ridge, lowering m, or increasing k may help.
    """


class DegenerateVariance(NumericalError):
    """Correlation is undefined because one input has zero variance."""
