"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, StageError -> 3,
InvariantViolation -> 4.
"""


class CityBiasError(Exception):
    """Base class for all package errors."""


class ConfigError(CityBiasError):
    """Bad or missing configuration, including malformed required input files."""


class StageError(CityBiasError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class InvariantViolation(CityBiasError):
    """Internal consistency check failed (pipeline ordering or count identity)."""
