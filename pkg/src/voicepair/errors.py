"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`VoicePairError`, so callers
can catch one base class at pipeline boundaries while tests pin the precise
subclass.
"""


class VoicePairError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(VoicePairError):
    """A file is structurally malformed (bad header, truncated chunk)."""


class UnsupportedError(VoicePairError):
    """A file is well-formed but uses an encoding we do not handle."""


class TooShortError(VoicePairError):
    """An audio clip is shorter than a single analysis frame."""


class ConfigError(VoicePairError):
    """A parameter combination is invalid (e.g. band above Nyquist)."""


class ShapeError(VoicePairError):
    """Array dimensions do not match what an operation requires."""


class ParseError(VoicePairError):
    """A CSV row could not be parsed; carries the offending row number."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SchemaError(VoicePairError):
    """A file header or token does not match the expected schema."""


class DuplicateError(VoicePairError):
    """The same (patient, task, condition) appears twice in a manifest."""


class AlignmentError(VoicePairError):
    """Paired groups do not cover the same patients."""


class InsufficientDataError(VoicePairError):
    """Not enough samples/patients to perform the requested operation."""


class InsufficientVoicingError(VoicePairError):
    """Too few voiced frames to compute a voicing-gated descriptor."""


class DegenerateError(VoicePairError):
    """Zero-variance input makes a statistic undefined."""


class NumericalError(VoicePairError):
    """An iterative numeric routine failed to converge."""


class DivergenceError(VoicePairError):
    """Training produced a non-finite loss; carries the epoch index."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class RefusalError(VoicePairError):
    """Refusing to overwrite existing output without --force."""
