"""Exception hierarchy.

``DataError`` subclasses describe bad inputs (CLI exit code 3),
``ConfigError`` describes bad settings (exit code 2).
"""


class CrossalError(Exception):
    pass


class ConfigError(CrossalError, ValueError):
    pass


class DataError(CrossalError, ValueError):
    pass


class _RowError(DataError):
    def __init__(self, row, detail=""):
        self.row = row
        msg = f"{type(self).__name__}(row={row})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


# ingest
class MissingColumn(DataError):
    def __init__(self, column, row=0):
        self.column = column
        self.row = row
        super().__init__(f"MissingColumn(row={row}): required column {column!r} absent")


class NonBinaryLabel(_RowError):
    pass


class NonNumericValue(_RowError):
    pass


class DecreasingTimestamp(_RowError):
    pass


class UnknownDataset(DataError):
    pass


class EmptySource(DataError):
    pass


class EmptyInput(DataError):
    pass


# features
class WindowTooSmall(ConfigError):
    pass


class ColumnCountMismatch(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"NonFiniteValue(row={row}, column={column!r})")


# cluster / adapt / forest
class KTooLarge(ConfigError):
    pass


class DegenerateInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class InsufficientRows(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


# activelearn / evaluate
class OutOfRange(DataError):
    pass


class EmptyPool(DataError):
    pass


class TooFewPoints(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyGroup(DataError):
    pass
