"""Exception hierarchy.

Every error carries a category used by the command line to pick an exit code:
configuration problems exit with 1, data problems with 2, solver problems with 3.
"""

from __future__ import annotations


class MstError(Exception):
    exit_code = 2


class ConfigError(MstError):
    exit_code = 1


class DataError(MstError):
    exit_code = 2


class SolverError(MstError):
    exit_code = 3


# domain / dataset
class ParseError(DataError):
    pass


class DuplicateAttribute(DataError):
    pass


class EmptyDomain(DataError):
    pass


class UnknownAttribute(DataError):
    pass


class UnknownValue(DataError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class HeaderMismatch(DataError):
    pass


class CliqueTooLarge(DataError):
    pass


class DomainMismatch(DataError):
    pass


class EmptyDataset(DataError):
    pass


class MissingAttribute(DataError):
    pass


class NonIntegerLabel(DataError):
    pass


# privacy accounting
class NonPositiveParameter(ConfigError):
    pass


class InvalidDelta(ConfigError):
    pass


class InvalidParams(ConfigError):
    pass


# mechanisms / selection
class LengthMismatch(ConfigError):
    pass


class EmptyCandidates(DataError):
    pass


class SameAttribute(ConfigError):
    pass


class Disconnected(DataError):
    pass


class MissingOneWay(DataError):
    pass


class TooFewAttributes(ConfigError):
    pass


# inference / generation
class TreewidthTooLarge(SolverError):
    pass


class EmptyLog(SolverError):
    pass


class InsufficientBudget(DataError):
    pass


class NegativeMass(DataError):
    pass


class EmptyPreimageWarning(UserWarning):
    """An "other" cell occurred in synthetic data but no original values were merged into it."""
