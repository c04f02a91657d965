"""Exception hierarchy shared by the library and the command line."""


class RecoveryCureError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RecoveryCureError, ValueError):
    """An argument lies outside the domain of a function."""


class PreconditionError(RecoveryCureError, ValueError):
    """Input violates a documented precondition (empty group, too few groups...)."""


class ParseError(RecoveryCureError, ValueError):
    """A portfolio file could not be parsed.

    ``line`` is the 1-based physical line in the file (the header is line 1)
    and ``field`` the offending column, when known.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SegmentationError(RecoveryCureError, ValueError):
    """A partition spec is invalid or selects no records."""


class InitializationError(RecoveryCureError, ValueError):
    """Starting values cannot be derived from the data."""


class UnidentifiableError(RecoveryCureError, ValueError):
    """The data carry no information about some parameter (e.g. no events)."""
