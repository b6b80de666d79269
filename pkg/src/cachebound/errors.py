"""Exception hierarchy shared across the toolkit.

Each class maps to one CLI exit code so scripted callers can
distinguish bad configuration from bad input from numerical blow-ups.
"""


class CacheBoundError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(CacheBoundError):
    """Invalid configuration: bad parameter values, malformed config file."""

    exit_code = 1


class InputError(CacheBoundError):
    """Invalid input data: malformed trace lines, out-of-range symbols."""

    exit_code = 2


class ParseError(InputError):
    """Malformed line in a recognized trace record.  Carries the line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NumericalError(CacheBoundError):
    """Training or evaluation produced NaN/Inf."""

    exit_code = 3
