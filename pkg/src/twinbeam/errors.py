"""Exception types raised by the twinbeam package."""


class DomainError(ValueError):
    """An input lies outside the domain of the model."""


class TruncationError(RuntimeError):
    """The Fock-space truncation is too small for the requested state or evolution.

    Attributes:
        minimal_dim: smallest per-mode dimension that would satisfy the check,
            when it can be determined.
    """

    def __init__(self, message: str, minimal_dim: int | None = None):
        super().__init__(message)
        self.minimal_dim = minimal_dim


class AccuracyError(RuntimeError):
    """A numerical integration failed its convergence or invariant checks."""
