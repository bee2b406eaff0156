"""Exception types. Each maps to a distinct CLI exit status."""


class EntCertError(Exception):
    exit_code = 1


class StructuralError(EntCertError, ValueError):
    """Malformed matrix input (non-square, asymmetric, wrong lengths)."""

    exit_code = 3


class DomainError(EntCertError, ValueError):
    """A numeric argument lies outside its admissible range."""

    exit_code = 4


class PreconditionError(DomainError):
    exit_code = 4


class DegeneratePivotError(PreconditionError):
    """Intermediate diagonal entry is zero; the 3x3 bound is undefined."""


class InputError(EntCertError, ValueError):
    exit_code = 5


class DegenerateDataError(InputError):
    exit_code = 5


class InsufficientDataError(InputError):
    exit_code = 5


class ConfigurationError(EntCertError, ValueError):
    exit_code = 6


class ParseError(EntCertError, ValueError):
    """Document could not be decoded. Carries line/column when known."""

    exit_code = 7

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ValidationError(EntCertError, ValueError):
    """Schema or invariant violations; ``problems`` lists every failure."""

    exit_code = 8

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SamplingFailure(EntCertError, RuntimeError):
    exit_code = 9
