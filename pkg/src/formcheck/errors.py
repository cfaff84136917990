"""Exception hierarchy shared across the package."""


class FormcheckError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(FormcheckError):
    """Input values violate a precondition (non-finite, empty, wrong range)."""


class StructureError(FormcheckError):
    """Shapes or lengths of related inputs do not line up."""


class ConfigError(FormcheckError):
    """A configuration value or combination is unusable."""


class NotFoundError(FormcheckError):
    """A requested item (segment label, pattern, file entry) is missing."""


class NoDataError(FormcheckError):
    """No usable training data for the requested operation."""


class DegenerateLabelsError(NoDataError):
    """Training labels contain only a single class."""


class SegmentationError(FormcheckError):
    """The phase state machine could not complete; remembers where it stopped."""

    def __init__(self, message, last_state):
        super().__init__(f"{message} (last reached state: {last_state})")
        self.last_state = last_state


class ParseError(FormcheckError):
    """A file could not be parsed; carries path and 1-based line number."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc = f"{loc}{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class VersionError(ParseError):
    """File format major version is not supported."""
