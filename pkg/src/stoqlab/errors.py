"""Exception types shared across stoqlab."""


class StoqlabError(Exception):
    pass


class ParseError(StoqlabError, ValueError):
    """Malformed input file. ``lineno`` is 1-based, or None when not line-specific."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        self.message = message
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


class WidthMismatch(StoqlabError, ValueError):
    pass


class CapExceeded(StoqlabError, RuntimeError):
    """A support, enumeration or dense-matrix budget would be exceeded."""


class ConvergenceError(StoqlabError, RuntimeError):
    pass


class PromiseViolation(StoqlabError):
    """Instance falls in the gap between the YES and NO promises."""
