"""Exception hierarchy shared by every urnlab module."""


class UrnError(Exception):
    """Base class for urnlab errors."""


class InvalidArgument(UrnError, ValueError):
    """An argument is outside the documented domain."""


class ModelError(UrnError):
    """The urn model does not satisfy a structural requirement."""


class NumericError(UrnError, ArithmeticError):
    """A numerical procedure failed or produced inconsistent results."""


class TenabilityViolation(ModelError):
    """A draw or an update would require removing balls that are not there."""
