"""Exception types shared across the engine."""


class FaregridError(Exception):
    """Base class for engine errors."""


class OutOfGridError(FaregridError):
    """A coordinate falls outside the configured grid."""


class HeaderError(FaregridError):
    """An input file header is missing a mapped column."""


class QuoteUnavailableError(FaregridError):
    """The price provider has no quote for the requested route/time."""


class InvalidBaseError(FaregridError):
    """A surge series has a non-positive base price."""


class EmptyInputError(FaregridError):
    """An operation that requires data received none."""


class DegenerateWeightsError(FaregridError):
    """Demand weights sum to zero."""


class UndefinedCorrelationError(FaregridError):
    """Pearson correlation is undefined (zero variance or too few points)."""


class AlignmentError(FaregridError):
    """Surge series cannot be resampled onto a common time grid."""


class EmptyJoinError(FaregridError):
    """Feature construction produced no overlapping areas."""


class UndefinedNDCGError(FaregridError):
    """NDCG is undefined because all gains are zero."""
