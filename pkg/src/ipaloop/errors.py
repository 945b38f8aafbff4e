"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the admissible domain (e.g. tau <= 0)."""


class MalformedTraceError(ValueError):
    """A trace violates one of the instruction or ordering invariants."""


class InternalOrderError(RuntimeError):
    """A timing query was made before the events it depends on were resolved."""


class UndefinedDerivativeError(ArithmeticError):
    """No sample was available to define a derivative (e.g. an empty cycle)."""


class ConfigError(ValueError):
    """Invalid experiment or controller configuration."""


class CycleError(RuntimeError):
    """An error raised inside a closed-loop run, tagged with its control cycle."""

    def __init__(self, cycle: int, cause: BaseException):
        super().__init__(f"control cycle {cycle}: {type(cause).__name__}: {cause}")
        self.cycle = cycle
