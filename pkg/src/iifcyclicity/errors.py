"""Exception types shared across the package."""


class IIFError(Exception):
    """Base class for all package errors."""


class DegreeLimitError(IIFError):
    """A polynomial operation would exceed the configured degree limit."""


class NotSingularError(IIFError):
    pass


class NotSaddleError(IIFError):
    pass


class IntegrationError(IIFError):
    """Raised when a numerical integration cannot reach its goal."""


class ChartError(IIFError):
    """Raised for failures of the curvilinear chart."""


class NormalFormError(IIFError):
    pass


class ConsistencyError(IIFError):
    """Input data contradicts a structural result."""


class JobError(IIFError):
    """Invalid job definition; carries a field path for diagnostics."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
