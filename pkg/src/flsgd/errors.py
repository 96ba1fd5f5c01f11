"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgument(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class UnsupportedOperator(ValueError):
    pass


class StepSizeTooLarge(ValueError):
    """An admissibility condition on the step sizes failed at index ``j`` (1-based)."""

    def __init__(self, message: str, j: int | None = None):
        super().__init__(message)
        self.j = j


class IllPosedSource(ValueError):
    pass


class UnsupportedBranch(ValueError):
    pass


class DataError(ValueError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    pass
