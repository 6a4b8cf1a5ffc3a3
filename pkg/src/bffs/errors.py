"""Exception hierarchy for the benchmark harness."""


class BffsError(Exception):
    """Base class for every error raised by the harness."""


class ScheduleError(BffsError, ValueError):
    """A run schedule has a zero or negative count."""


class ScheduleOverflowError(ScheduleError, OverflowError):
    """The schedule's file count does not fit in an unsigned 64-bit counter."""


class DistributionError(BffsError, ValueError):
    """File-size distribution parameters are invalid or the sampler gave up."""


class PayloadError(BffsError, ValueError):
    """A payload cannot be framed (it is empty)."""


class RunAbortError(BffsError):
    """A failure that ends the run: no space, permission denied, stat failure."""


class RunAborted(BffsError):
    """Raised by a phase runner after an abort; carries the partial result."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class InconsistentMetricsError(BffsError, ValueError):
    """Phase results cannot yield meaningful derived metrics."""


class ConfigError(BffsError, ValueError):
    """Invalid command-line flag or configuration value."""

    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")
        self.flag = flag
