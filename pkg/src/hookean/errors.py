"""Exception and warning types shared across the package."""


class HookeanError(Exception):
    """Base class for all package errors."""


class InvalidInputError(HookeanError, ValueError):
    """Bad arguments: non-finite values, mismatched grids, empty specs."""


class NumericFailureError(HookeanError, RuntimeError):
    """A numerical routine failed to converge; carries diagnostics."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegradedBasisError(HookeanError, RuntimeError):
    """Orthogonalization lost accuracy; carries the first failing pair."""

    def __init__(self, message, pair=None, overlap=None):
        super().__init__(message)
        self.pair = pair
        self.overlap = overlap


class SearchFailureError(HookeanError, RuntimeError):
    """Eigenvalue bracket not found; carries the searched window."""

    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class NonConvergenceError(HookeanError, RuntimeError):
    """Self-consistency loop hit its iteration cap."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


class TruncationWarning(UserWarning):
    """A truncated expansion left a norm deficit larger than requested."""


class DomainWarning(UserWarning):
    """A computation was restricted to a trusted sub-domain."""
