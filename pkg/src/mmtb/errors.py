"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) and an
``exit_code`` used by the command line front-end.
"""

from __future__ import annotations


class MMTBError(Exception):
    exit_code = 3

    @property
    def code(self) -> str:
        return type(self).__name__


class DataError(MMTBError):
    exit_code = 2


class MalformedHeader(DataError):
    pass


class MissingCell(DataError):
    pass


class DuplicateCell(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class MalformedRow(DataError):
    pass


class EmptyChain(DataError):
    pass


class IncompatibleChains(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyDraws(DataError):
    pass


class EmptyProfile(DataError):
    pass


class ConfigError(MMTBError):
    exit_code = 1


class DegenerateWeights(MMTBError):
    pass


class IoError(MMTBError):
    pass
