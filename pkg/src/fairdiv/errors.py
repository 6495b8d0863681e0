"""Exception hierarchy shared by every fairdiv module."""


class FairDivError(Exception):
    """Base class for all fairdiv errors."""


class InputError(FairDivError, ValueError):
    """Malformed or out-of-range input (CLI exit code 2)."""


class ParseError(InputError):
    """A file or token could not be parsed; the message names the field."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class OracleLimitError(FairDivError):
    """A brute-force oracle would exceed its enumeration budget."""

    def __init__(self, message, partial_count=None):
        self.partial_count = partial_count
        super().__init__(message)


class InvariantViolation(FairDivError, RuntimeError):
    """A state the algorithm provably never reaches was reached; this is a bug."""

    def __init__(self, message, state=None):
        self.state = state
        if state is not None:
            message = f"{message}\nstate dump: {state!r}"
        super().__init__(message)
