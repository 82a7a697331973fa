"""Exception hierarchy shared by all modules."""


class SpectralError(Exception):
    """Base class for computation errors raised by this package."""


class InvalidInputError(SpectralError, ValueError):
    """Input data violates a documented precondition."""


class FundamentalOverflowError(SpectralError, OverflowError):
    """The fundamental system left floating-point range."""

    def __init__(self, mu, magnitude):
        self.mu = complex(mu)
        self.magnitude = magnitude
        super().__init__(
            f"fundamental system overflow at mu={self.mu!r} (|state| ~ {magnitude:.3g})"
        )


class ZeroOnBoundaryError(SpectralError):
    """A zero of the function lies on (or numerically at) the contour."""


class WindingError(SpectralError):
    """The argument-principle integral did not settle on an integer."""


class MiscountError(SpectralError):
    """Located roots disagree with the contour count."""


class NotAdmissibleError(SpectralError):
    """Target data falls outside the class the inverse construction accepts."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} (n={index})")


class ConvergenceError(SpectralError):
    """A truncation or refinement failed to converge."""


class SingularSystemError(SpectralError):
    """A linear system is numerically singular."""
