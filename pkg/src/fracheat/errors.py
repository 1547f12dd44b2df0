"""Exception types raised by fracheat."""


class FracHeatError(Exception):
    """Base class for library errors."""


class QuadratureError(FracHeatError):
    """Quadrature could not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative tolerance {achieved:.3g})")
        self.achieved = achieved


class TailFitError(FracHeatError):
    """The tabulated profile does not show a clean power tail."""


class AliasingBudgetError(FracHeatError):
    """Periodic wrap-around of the kernel tail exceeds the tolerance budget."""

    def __init__(self, message: str, max_time: float):
        super().__init__(f"{message}; maximum admissible time is {max_time:.6g}")
        self.max_time = max_time


class DomainError(FracHeatError):
    """Data or evaluation points fall outside the region a routine can handle."""


class ConfigError(FracHeatError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
