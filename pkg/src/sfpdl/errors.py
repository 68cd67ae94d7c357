"""Exception hierarchy shared by every estimator in the package."""


class SfpdlError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SfpdlError, ValueError):
    pass


class RankDeficient(SfpdlError, ValueError):
    pass


class ZeroVariance(SfpdlError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class UnknownColumn(SfpdlError, KeyError):
    pass


class NonPositiveValue(SfpdlError, ValueError):
    def __init__(self, row, column, value):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"non-positive value {value!r} at row {row}, column {column!r}; cannot take log")


class MissingCoefficient(SfpdlError, KeyError):
    pass


class InvalidParams(SfpdlError, ValueError):
    pass


class NoConvergence(SfpdlError, RuntimeError):
    pass


class DegenerateFolds(SfpdlError, ValueError):
    pass


class SupportTooLarge(SfpdlError, ValueError):
    pass


class MissingSE(SfpdlError, ValueError):
    pass


class TooFewBins(SfpdlError, ValueError):
    pass


class ConfigError(SfpdlError, ValueError):
    pass


class DataError(SfpdlError, ValueError):
    pass


class MissingColumn(DataError, KeyError):
    pass


class ParseError(DataError):
    def __init__(self, row, column, message):
        self.row, self.column = row, column
        super().__init__(f"row {row}, column {column!r}: {message}")


class EmptyData(DataError):
    pass
