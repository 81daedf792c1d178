"""Exception hierarchy.

Two broad families are used by the CLI to pick an exit code:
``ValidationError`` (bad input, exit 2) and ``NumericError``
(a computation that cannot be carried out reliably, exit 3).
"""


class UltrafunctionError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(UltrafunctionError, ValueError):
    pass


class DomainError(ValidationError):
    """A point or singularity lies outside the domain."""


class SpaceMismatchError(ValidationError):
    """Objects belonging to different function spaces were combined."""


class CapabilityError(ValidationError):
    """A generator family lacks a required capability (derivative, transform)."""


class ConfigError(ValidationError):
    pass


class NumericError(UltrafunctionError, ArithmeticError):
    pass


class IntegrationError(NumericError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateSpaceError(NumericError):
    pass


class ResolutionError(NumericError):
    """The quadrature rule has too few nodes for the space it serves."""


class NotAMemberError(NumericError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DependentPointsError(NumericError):
    pass


class NotPositiveError(NumericError):
    pass


class DivergentPairingError(NumericError):
    pass


class ChainError(NumericError):
    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
