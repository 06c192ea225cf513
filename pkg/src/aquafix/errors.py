"""Exception and warning types shared across the toolkit.

Geometry errors mark a single detection as unestimable; parse errors carry
file/line/field context; matching errors abort an evaluation run.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Input outside the model's physical domain (bad altitude, bad latitude, ...)."""


class HorizonError(DomainError):
    """Viewing ray at or above the horizon: no water-plane intersection ahead."""


class PoleSingularityError(ValueError):
    """East-west conversion undefined where a degree of longitude has zero length."""


class BehindCameraError(ValueError):
    """Target has non-positive depth along the optical axis."""


class OutOfFrameError(ValueError):
    """Projected point falls outside the image; carries the off-image pixel."""

    def __init__(self, message: str, pixel=None):
        super().__init__(message)
        self.pixel = pixel


class NearHorizonWarning(UserWarning):
    """Ray close enough to the horizon that range errors amplify sharply."""


class ParseError(ValueError):
    """Malformed input; the message names source, 1-based line, and field."""

    def __init__(self, message: str, *, source: str = "<input>", line: int = 0,
                 field: str | None = None):
        self.source = source
        self.line = line
        self.field = field
        where = f"{source}:{line}"
        if field is not None:
            where += f": field '{field}'"
        super().__init__(f"{where}: {message}")


class MissingColumnError(ParseError):
    """A required column or field is absent."""


class UnitRangeViolationError(ParseError):
    """A value lies outside its documented physical range."""


class NonMonotoneTimestampError(ParseError):
    """Timestamps regressed within one telemetry file."""


class DuplicateFrameError(ParseError):
    """The same frame id appeared twice in one telemetry file."""


class ValueOutOfUnitRangeError(ParseError):
    """A normalized value fell outside [0, 1]."""


class BadFilenamePatternError(ParseError):
    """A label file name does not match the frame_<id>.txt pattern."""


class UnknownFormatError(ParseError):
    """An unrecognized format selector was given."""


class OrphanDetectionError(ParseError):
    """A detection references a frame id with no telemetry record."""


class UnmatchedTrackError(ValueError):
    """No truth record lies within the matching gate for a track."""


class AmbiguousMatchError(ValueError):
    """Two tracks resolved to the same truth record."""
