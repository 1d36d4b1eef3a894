"""Exception types raised across the package."""


class LatsphereError(Exception):
    """Base class for every error raised by latsphere."""


class ConfigurationError(LatsphereError, ValueError):
    """Malformed space, norm or experiment configuration.

    ``line`` and ``column`` are set when the error comes from parsing a
    configuration document.
    """

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class DomainError(LatsphereError, ValueError):
    """An argument lies outside the domain of the operation."""


class SizeError(DomainError):
    """The requested construction is too large to enumerate."""


class NonSmoothError(DomainError):
    """The norm is not differentiable at the given point."""

    def __init__(self, message, atom):
        super().__init__(message)
        self.atom = atom


class SolverError(LatsphereError, RuntimeError):
    """An iterative solver hit its iteration cap or stalled.

    ``best`` carries the best value reached (for dual evaluation this is a
    certified lower bound).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SamplingError(LatsphereError, RuntimeError):
    """Every drawn sample was degenerate."""


class UnsupportedReportError(LatsphereError, ValueError):
    """The report carries no curve or binned payload to export."""
