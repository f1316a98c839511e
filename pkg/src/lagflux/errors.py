"""Exception hierarchy shared by every lagflux module."""


class LagfluxError(Exception):
    """Base class for all errors raised by lagflux."""


class DegenerateClass(LagfluxError, ValueError):
    """A nonzero class (or direction) was required but zero was given."""


class DimensionError(LagfluxError, ValueError):
    """Vectors of incompatible dimension were combined."""


class OutsideDomain(LagfluxError, ValueError):
    """A point lies outside the domain on which an operation is defined."""


class InvalidPartition(LagfluxError, ValueError):
    """Arc or interval lengths do not produce a valid partition."""


class InvalidModel(LagfluxError, ValueError):
    """Parameters violate the preconditions of a model construction."""


class InvalidPair(LagfluxError, ValueError):
    """A function pair violates the boundary constraints of its quadruple."""


class DomainEscape(LagfluxError, RuntimeError):
    """A trajectory left the model domain.

    The trajectory computed up to the escape is kept on ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ProblemParseError(LagfluxError, ValueError):
    """Syntax or semantic error in a problem file, with a source position."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
