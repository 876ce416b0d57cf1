"""Exception hierarchy shared by every ferdisc module."""


class FerdiscError(Exception):
    """Base class for all library errors."""


class ValidationError(FerdiscError, ValueError):
    """Input violates a precondition (bad shape, range, normalization...)."""


class SuperselectionError(ValidationError):
    """A vector or operator mixes the even and odd parity sectors."""


class ConvergenceError(FerdiscError, ArithmeticError):
    """An iterative numerical routine did not reach its tolerance."""


class ProtocolError(FerdiscError):
    """A measurement protocol is malformed or cannot be built for the input."""
