class TwoDomainError(Exception):
    """Base class for every error raised by the twodomain package."""


class ConfigError(TwoDomainError, ValueError):
    """Invalid problem data, grid, schedule or solver parameters."""


class SolverError(TwoDomainError, RuntimeError):
    """A numerical solve diverged or did not reach its tolerance.

    Parameters
    ----------
    message : str
        Human readable description.
    trace : list of float, optional
        Residual history of the failing iteration (last entries).
    """

    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class EmptyControlSetError(SolverError):
    """No admissible control exists where one is required."""


class UncataloguedError(TwoDomainError, KeyError):
    """Closed-form lookup outside the known catalogue."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
