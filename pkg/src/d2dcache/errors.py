"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ParameterError):
    """A numeric argument lies outside the function's domain."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class SurrogateRangeError(ParameterError):
    """The Dinkelbach surrogate ordering broke at the given ratio guess."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"surrogate utility ordering violated at t={t!r}")


class ConfigError(ValueError):
    """An experiment configuration file is invalid."""
