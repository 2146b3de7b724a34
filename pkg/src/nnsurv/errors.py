"""Exception types raised across the package.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch that and move on.
"""


class SurvivalError(ValueError):
    """Base class for all package errors."""


# data ingestion / records
class MissingColumn(SurvivalError):
    pass


class NonNumericValue(SurvivalError):
    pass


class NegativeTime(SurvivalError):
    pass


class EventNotBinary(SurvivalError):
    pass


class EmptyDataset(SurvivalError):
    pass


class DimensionMismatch(SurvivalError):
    pass


# step functions / product-limit computations
class EmptySubset(SurvivalError):
    pass


class AllWeightsZero(SurvivalError):
    pass


class LengthMismatch(SurvivalError):
    pass


class InvalidInterval(SurvivalError):
    pass


# neighbor estimators
class KTooLarge(SurvivalError):
    pass


class NoNeighbors(SurvivalError):
    pass


class DegenerateTail(SurvivalError):
    pass


# forests
class TooFewRecords(SurvivalError):
    pass


class IndexOutOfRange(SurvivalError):
    pass


# evaluation / selection
class NoComparablePairs(SurvivalError):
    pass


class InvalidConfig(SurvivalError):
    pass


class UnTunable(SurvivalError):
    pass
