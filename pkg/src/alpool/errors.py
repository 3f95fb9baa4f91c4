"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: usage errors exit 2 (argparse),
DataError subclasses exit 3, DivergenceError exits 4.
"""


class AlpoolError(Exception):
    """Base class for all engine errors."""


class DataError(AlpoolError):
    """A problem with input data or file contents."""


class BadMagicError(DataError):
    pass


class VersionMismatchError(DataError):
    pass


class TruncatedPayloadError(DataError):
    pass


class NonFiniteValueError(DataError):
    pass


class DuplicateIdError(DataError):
    pass


class IdRangeError(DataError):
    pass


class UnknownSplitError(DataError):
    pass


class ZeroNormError(DataError):
    """Attempt to L2-normalize a zero vector."""


class DimensionMismatchError(DataError):
    pass


class InitialSamplingError(DataError):
    """The candidate pool cannot supply the required positives and negatives."""


class DegenerateTrainingError(AlpoolError):
    """Training set contains a single class; the classifier cannot be fit."""


class DivergenceError(AlpoolError):
    """Optimization produced a non-finite loss or gradient."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
