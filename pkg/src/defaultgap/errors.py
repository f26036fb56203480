"""Exception types raised by the library."""


class DefaultGapError(Exception):
    """Base class for all library errors."""


class ModelError(DefaultGapError, ValueError):
    """Invalid model parameters (carries the list of violations)."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NoExponentialMoment(DefaultGapError, ValueError):
    pass


class QuadratureFailure(DefaultGapError, ArithmeticError):
    pass


class NotApplicable(DefaultGapError, ValueError):
    """Bridge corrections requested for a model without a diffusive part."""


class BadStart(DefaultGapError, ValueError):
    """Initial firm value at or below the debt barrier."""


class NoDefaults(DefaultGapError, RuntimeError):
    pass


class OutOfSupport(DefaultGapError, ValueError):
    pass


class OutOfDomain(DefaultGapError, ValueError):
    pass


class TruncationTooSevere(DefaultGapError, RuntimeError):
    pass


class SeriesTooShort(DefaultGapError, ValueError):
    pass


class ConfigError(DefaultGapError, ValueError):
    pass
