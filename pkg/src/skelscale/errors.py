class SkelscaleError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SkelscaleError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(SkelscaleError, ValueError):
    """Malformed input stream. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
