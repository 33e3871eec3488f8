class KSumsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InvalidConfigurationError(KSumsError, ValueError):
    exit_code = 2


class DataError(KSumsError, ValueError):
    """Input data is malformed or incompatible with the requested run."""

    exit_code = 3


class ParseError(DataError):
    """Positioned parse failure. ``offset`` is a byte offset or 1-based line number."""

    def __init__(self, path, offset, message, unit="line"):
        self.path = str(path)
        self.offset = offset
        self.unit = unit
        super().__init__(f"{self.path}: {unit} {offset}: {message}")


class DegenerateClusterError(KSumsError, RuntimeError):
    """A composite vector collapsed to zero norm under the cosine metric."""

    exit_code = 4


class ContractViolation(AssertionError):
    """Programming error: a documented precondition was not met."""
