"""Root exceptions shared by every package.

Each exception carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEPENDENCY = 3
EXIT_NUMERIC = 4


class TVDMError(Exception):
    """Base exception for all errors raised by this project."""

    exit_code: int = 1

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class ConfigError(TVDMError):
    """Raised when a configuration key or value is invalid."""

    exit_code = EXIT_USAGE

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        msg = f"Invalid configuration: {message}"
        if key:
            msg = f"Invalid configuration for '{key}': {message}"
        super().__init__(msg)


class StageDependencyError(TVDMError):
    """Raised when a pipeline stage runs before the stage it depends on."""

    exit_code = EXIT_DEPENDENCY

    def __init__(self, missing_stage: str, detail: str | None = None):
        self.missing_stage = missing_stage
        msg = f"Missing upstream stage '{missing_stage}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NumericFailureError(TVDMError):
    """Raised when a loss or gradient stops being finite."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        msg = message if step is None else f"{message} (step {step})"
        super().__init__(msg)
