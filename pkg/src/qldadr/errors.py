"""Exception hierarchy shared by every stage of the simulator."""


class QldaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QldaError):
    """Invalid configuration, rejected before any simulation runs."""


class DataError(QldaError):
    """Malformed or degenerate input data."""


class NumericalError(QldaError):
    """A numerical precondition failed (asymmetry, null branch, entanglement)."""


class BranchAmbiguityError(ConfigError):
    """Two branches share an eigenvalue bit pattern at the configured precision."""


class PipelineError(QldaError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
