"""Exception types shared across the package."""


class GpcertError(Exception):
    """Base class for all package errors."""


class InfeasibleError(GpcertError):
    """No certificate exists for the requested LMI set."""


class NumericalFailure(GpcertError):
    """The solver or filter hit an ill-conditioned or non-finite state."""


class SingularGainError(GpcertError):
    """The plant input gain b(y, t) is (numerically) zero."""


class IntegrationError(GpcertError):
    """A non-finite derivative was produced during integration."""


class ConfigError(GpcertError):
    """A configuration document failed validation."""
