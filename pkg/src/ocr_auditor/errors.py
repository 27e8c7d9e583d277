"""Exception hierarchy; the CLI maps each branch to an exit code."""


class AuditorError(Exception):
    """Base class for all errors raised by this package."""


class InputError(AuditorError):
    """A file could not be read or decoded (exit code 1)."""


class ValidationError(AuditorError, ValueError):
    """Inputs are readable but violate a contract (exit code 2)."""


class KbParseError(ValidationError):
    def __init__(self, message: str, line: int, source: str = "<kb>"):
        self.line = line
        self.source = source
        super().__init__(f"{source}:{line}: {message}")


class KbValidationError(ValidationError):
    def __init__(self, message: str, code: str | None = None):
        self.code = code
        super().__init__(message)
