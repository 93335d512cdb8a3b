"""Exception hierarchy.

Validation problems (bad inputs, malformed files) derive from
``ValidationError``; numerical failures (overflow, non-convergence) derive
from ``NumericalError``.  The CLI maps them to exit codes 1 and 2.
"""


class PvError(Exception):
    """Base class for all package errors."""


class ValidationError(PvError, ValueError):
    pass


class NumericalError(PvError, ArithmeticError):
    pass


class ExponentOverflowError(NumericalError):
    """Diode exponent argument exceeded the configured cap."""

    def __init__(self, argument, cap):
        self.argument = argument
        self.cap = cap
        super().__init__(
            f"diode exponent argument {argument!r} exceeds cap {cap!r}")


class ConvergenceError(NumericalError):
    """Iterative solve failed; carries the last bracket ``(lo, hi)``."""

    def __init__(self, message, bracket=None, voltage=None):
        self.bracket = bracket
        self.voltage = voltage
        if bracket is not None:
            message = f"{message} (last bracket {bracket})"
        if voltage is not None:
            message = f"{message} at v={voltage!r}"
        super().__init__(message)


class MalformedCurveError(ValidationError):
    pass


class DocumentError(ValidationError):
    """Model document could not be parsed; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class CsvFormatError(ValidationError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
