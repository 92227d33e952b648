"""Exception types shared across the package."""


class ContactForgeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ContactForgeError):
    """Raised when an argument violates a documented precondition."""


class InvalidConfigError(ContactForgeError):
    """Raised for malformed configuration (schedules, widths, paths)."""


class UnsupportedObjectError(ContactForgeError):
    """Raised for an unknown object primitive kind."""


class NotReadyError(ContactForgeError):
    """Raised when an operation requires trained weights that are missing."""


class SynthesisFailure(ContactForgeError):
    """Raised when a grasp prompt cannot be realized on the given object."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class OptimizationFailure(ContactForgeError):
    """Raised when every optimizer restart diverged; carries partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InternalConsistencyError(ContactForgeError):
    """Raised when a frozen-parameter contract is violated mid-run."""


class NumericalFailure(ContactForgeError):
    """Raised when sampling produces non-finite latents."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
