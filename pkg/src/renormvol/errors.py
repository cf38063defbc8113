"""Exception types shared across the package."""


class RenormVolError(Exception):
    """Base class for all errors raised by renormvol."""


class SingularTransform(RenormVolError, ArithmeticError):
    """A transform to or from infinity hit a principal curvature of -1."""


class GridTooCoarse(RenormVolError, ValueError):
    """A finite-difference stencil does not fit in the available samples."""


class OutOfDomain(RenormVolError, ValueError):
    """A point lies outside the domain of a field or map."""


class CriticalPoint(RenormVolError, ArithmeticError):
    """The derivative of a holomorphic map vanishes (numerically)."""


class DegenerateTriangle(RenormVolError, ValueError):
    """A mesh face violates the strict triangle inequality."""


class WrongTopology(RenormVolError, ValueError):
    """The surface topology is incompatible with the requested target curvature."""


class NonConvergence(RenormVolError, RuntimeError):
    """The Newton solver exhausted its iteration budget.

    The best iterate and the solver diagnostics are attached so callers can
    still inspect or report them.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ParseError(RenormVolError, ValueError):
    """A text input could not be parsed; carries a 1-based line and column."""

    def __init__(self, message, line, column, source="<input>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")
