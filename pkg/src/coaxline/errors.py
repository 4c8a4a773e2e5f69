"""Exception taxonomy shared by all coaxline modules.

Exit-code mapping used by the CLI: usage errors exit 2, parse errors 3,
validation errors 4, fit failures 5.
"""


class CoaxlineError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(CoaxlineError):
    """Conflicting or malformed command-line / config usage."""

    exit_code = 2


class ParseError(CoaxlineError):
    """Malformed input file; carries location when known."""

    exit_code = 3

    def __init__(self, message, line=None, column=None, path=None):
        loc = ""
        if path is not None:
            loc += f"{path}: "
        if line is not None:
            loc += f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column
        self.path = path


class UnsupportedFormatError(ParseError):
    """File uses a format token the toolkit does not implement."""


class ValidationError(CoaxlineError):
    """Semantically invalid data (well-formed but out of contract)."""

    exit_code = 4


class InvalidInputError(ValidationError):
    """Non-finite, out-of-range, or wrongly-signed numeric input."""


class PropagatingModeError(InvalidInputError):
    """Frequency at or above cutoff: evanescent attenuation undefined."""


class InsufficientDataError(ValidationError):
    """Too few points for the requested fit."""


class SignInconsistencyError(InvalidInputError):
    """chi and delta of opposite sign: unphysical dispersive parameter set."""


class DegenerateDetuningError(InvalidInputError):
    """Zero qubit-resonator detuning."""


class NonPhysicalDephasingError(InvalidInputError):
    """T2 exceeds the 2*T1 lifetime limit beyond tolerance."""


class IncompleteSetError(ValidationError):
    """A required optional field is absent from a parameter set."""


class IncompleteBudgetError(ValidationError):
    """Loss budget holds no sources."""


class FitError(CoaxlineError):
    """Base class for fitting failures."""

    exit_code = 5


class NoResonanceError(FitError):
    """Trace shows neither a significant dip nor a phase roll."""


class DegenerateGeometryError(FitError):
    """Collinear or otherwise circle-degenerate data."""


class FitFailureError(FitError):
    """Optimizer did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
