"""Exception and warning types shared across the package."""


class StreamPcaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(StreamPcaError, ValueError):
    """A matrix or vector has an empty or incompatible shape."""


class DataError(StreamPcaError, ValueError):
    """Input values are unusable (non-finite entries, bad payload).

    ``row`` is the absolute row index of the first offending row when the
    error arose inside a streamed pass, else None.
    """

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class FormatError(StreamPcaError):
    """A matrix file does not match its declared or self-described layout."""


class StreamFormatError(StreamPcaError):
    """A row stream yielded a block inconsistent with the stream contract."""


class EmptyStreamError(StreamPcaError):
    """An operation that needs at least one row saw none."""


class CapabilityError(StreamPcaError):
    """The given stream lacks a capability the algorithm requires
    (resettability for multi-pass methods, a known row count up front)."""


class ConfigError(StreamPcaError, ValueError):
    """Invalid algorithm configuration or parameter domain violation."""


class RankDeficiencyError(StreamPcaError):
    """A QR factorization met a numerically dependent column.

    ``column`` is the offending column index within the factored matrix.
    When raised from the blocked QB loop, ``block`` is the block iteration
    and ``column`` is the global column index in the sketch.
    """

    def __init__(self, message, column=None, block=None):
        super().__init__(message)
        self.column = column
        self.block = block


class SingularMatrixError(StreamPcaError):
    """A triangular solve met a zero or near-zero diagonal entry."""


class ScaleError(StreamPcaError):
    """A dense desk-scale oracle was asked for more than it is sized for."""


class ConditioningWarning(UserWarning):
    """The small linear system inside the co-sketch baseline is
    ill-conditioned; its result may be inaccurate."""
