"""Exception types shared across the package."""


class EventTreeError(Exception):
    """Base class for all package errors."""


class ValidationError(EventTreeError, ValueError):
    """Input violates a documented invariant."""


class ParseError(ValidationError):
    """A record in an interaction log could not be parsed."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        where = [str(x) for x in (path, None if line is None else f"line {line}") if x is not None]
        super().__init__(": ".join([*where, message]))


class NotFoundError(EventTreeError, LookupError):
    """A referenced vertex or interaction does not exist."""
