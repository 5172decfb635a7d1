"""Exception types shared across the package."""


class ClirError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ClirError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        where = ""
        if path is not None:
            where = f"{path}:"
        if line_no is not None:
            where += f"{line_no}: "
        elif path is not None:
            where += " "
        super().__init__(where + message)


class IntegrityError(ClirError):
    """Input data violates a structural rule (duplicate ids, conflicting grades)."""


class ConfigError(ClirError):
    """Components were wired together inconsistently (languages, methods, parameters)."""


class NotFoundError(ClirError):
    """A referenced document or query id does not exist."""


class NoPairError(ClirError):
    """A document has no resolvable comparable-document link."""


class TranslationError(ClirError):
    """An external translation call failed; the message names the failing input."""
