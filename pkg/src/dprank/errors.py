"""Exception hierarchy shared by the library and the CLI."""


class DPRankError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InvalidPermutationError(DPRankError, ValueError):
    exit_code = 5


class DimensionError(DPRankError, ValueError):
    exit_code = 5


class DegenerateInputError(DPRankError, ValueError):
    exit_code = 8


class InvalidPairError(DPRankError, ValueError):
    exit_code = 5


class UnsupportedError(DPRankError):
    exit_code = 7


class NoInteriorMinimumError(DPRankError):
    """The closed-form stationary point of the bound does not exist."""

    exit_code = 6


class BallotParseError(DPRankError, ValueError):
    exit_code = 3

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class ConfigError(DPRankError, ValueError):
    exit_code = 4

    def __init__(self, message, keys=()):
        if keys:
            message = f"{message}: {', '.join(sorted(keys))}"
        super().__init__(message)
        self.keys = tuple(keys)


class InvariantViolation(DPRankError):
    exit_code = 6
