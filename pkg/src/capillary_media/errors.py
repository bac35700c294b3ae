"""Exception types shared across the package."""


class CapillaryError(Exception):
    """Base class for all package errors."""


class DomainError(CapillaryError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SingularPointError(CapillaryError, ArithmeticError):
    """The branch equation is singular here; continue in arc length instead."""


class NumericalError(CapillaryError, RuntimeError):
    """A root bracket or quadrature failed to deliver the requested accuracy."""


class DegenerateInputError(CapillaryError, ValueError):
    """Coincident or otherwise degenerate geometric input."""


class InfeasibleError(CapillaryError, ValueError):
    """The requested construction has no solution for these parameters."""


class VolumeFixedPointError(CapillaryError, RuntimeError):
    """The volume fixed point did not settle.

    ``bracket`` holds the last two values of v1 visited by the iteration.
    """

    def __init__(self, message, bracket=(float("nan"), float("nan"))):
        super().__init__(message)
        self.bracket = tuple(bracket)


class ConfigError(CapillaryError, ValueError):
    """Invalid experiment configuration."""
