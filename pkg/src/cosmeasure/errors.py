"""Exception hierarchy shared by every module of the package."""


class CosineMeasureError(Exception):
    """Base class for all errors raised by cosmeasure."""


class ZeroVectorError(CosineMeasureError, ValueError):
    pass


class SingularBasisError(CosineMeasureError, ValueError):
    pass


class UpdateSingularError(CosineMeasureError, ValueError):
    pass


class UnboundedPolytopeError(CosineMeasureError):
    pass


class NotPositiveSpanningError(CosineMeasureError):
    pass


class NoCandidateFoundError(CosineMeasureError):
    pass


class InvalidDeltaError(CosineMeasureError, ValueError):
    pass


class TargetOutOfRangeError(CosineMeasureError, ValueError):
    pass


class InvalidSizeError(CosineMeasureError, ValueError):
    pass


class AugmentationStalledError(CosineMeasureError):
    pass


class CorpusIOError(CosineMeasureError, OSError):
    pass


class ParseError(CosineMeasureError, ValueError):
    pass


class DimensionError(CosineMeasureError, ValueError):
    pass


class EmptyUniverseError(CosineMeasureError, ValueError):
    pass
