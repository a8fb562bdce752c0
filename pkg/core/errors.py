"""
Errors - Exception hierarchy shared by every core module

Two families: invalid-argument (caller error, CLI exit 1) and
numeric failure (the computation itself broke down, CLI exit 2).
"""


class RCPError(Exception):
    """Base class for toolkit errors."""
    pass


class InvalidArgumentError(RCPError, ValueError):
    """Raised when inputs violate an operation's preconditions."""
    pass


class CapacityError(InvalidArgumentError):
    """Raised when an exact enumeration would exceed the configured cap."""
    pass


class DomainError(InvalidArgumentError):
    """Raised when a bound or formula is inapplicable to the inputs."""
    pass


class UndefinedAngleError(InvalidArgumentError):
    """Raised when an angle involves a zero vector."""
    pass


class NumericFailureError(RCPError, ArithmeticError):
    """Raised on non-convergence or out-of-range floating results."""
    pass


class DegenerateMeasurementError(NumericFailureError):
    """Raised when a nonzero signal is measured to the zero vector."""
    pass


class DegenerateSampleError(NumericFailureError):
    """Raised when a statistical test receives a zero-variance sample."""
    pass
