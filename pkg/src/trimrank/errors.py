"""Exception types raised across the package."""


class TrimRankError(Exception):
    """Base class for all package errors."""


class StructuralError(TrimRankError, IndexError):
    """An index, length or shape does not match the data it refers to."""


class SolverError(TrimRankError, ArithmeticError):
    """A numerical routine stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class InvariantError(TrimRankError, AssertionError):
    """An internal invariant was violated (indicates a bug)."""


class ParseError(TrimRankError, ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
