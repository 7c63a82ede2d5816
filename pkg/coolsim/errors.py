"""Exception types raised across coolsim.

Everything derives from :class:`ValueError` as well, so callers that only
catch ``ValueError`` keep working.
"""

from __future__ import annotations


class CoolsimError(Exception):
    """Base class for coolsim errors."""


class InvalidInputError(CoolsimError, ValueError):
    """A physical quantity or argument is outside its valid range."""


class CalibrationError(CoolsimError, ValueError):
    """A valve calibration or observer calibration cannot be used."""


class DegenerateDataError(CoolsimError, ValueError):
    """Trial data cannot support a psychometric fit."""


class TrialFormatError(CoolsimError, ValueError):
    """A trial CSV row is malformed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
