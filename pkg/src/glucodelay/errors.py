"""Exception hierarchy shared by all modules."""


class GlucodelayError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GlucodelayError, ValueError):
    """Invalid parameters or an unparsable configuration file."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DomainError(GlucodelayError, ValueError):
    """A function was evaluated outside its declared domain."""


class ModelError(GlucodelayError):
    """The model hypotheses fail in a way that blocks a computation."""


class MapError(GlucodelayError):
    """The interval map could not be evaluated (bracket failure)."""


class LinearizationError(GlucodelayError):
    """Linearization requested at a point where a nonlinearity is not smooth."""


class InterpolationError(GlucodelayError, ValueError):
    """Interpolation stencil is degenerate."""


class IntegrationError(GlucodelayError):
    """The DDE integrator could not continue."""
