"""Custom exceptions for the command line."""

from src.exceptions import EXIT_USAGE, TVDMError


class RunDirectoryError(TVDMError):
    """Raised when a command would overwrite existing outputs without --force."""

    exit_code = EXIT_USAGE

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"{path} already exists; pass --force to overwrite")
