"""Exception hierarchy shared by every module."""


class HgrError(ValueError):
    """Base class for input validation failures."""


class ZeroVariance(HgrError):
    pass


class InvalidDegree(HgrError):
    pass


class DimensionMismatch(HgrError):
    pass


class LengthMismatch(HgrError):
    pass


class InvalidSpec(HgrError):
    pass


class NoOracle(HgrError):
    pass


class MissingColumn(HgrError):
    pass


class NonNumericValue(HgrError):
    pass


class EmptyDataset(HgrError):
    pass


class RankDeficient(UserWarning):
    """Emitted (never raised) when a kernel basis is numerically rank deficient."""
