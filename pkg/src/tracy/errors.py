"""Exception types shared across modules."""

from __future__ import annotations


class TracyError(Exception):
    """Base class for all errors raised by this package."""


class MissingReference(TracyError):
    """An operation was handed an id that does not resolve in the model."""

    def __init__(self, message: str, subjects: tuple[str, ...] = ()):
        super().__init__(message)
        self.subjects = subjects


class InvalidModel(TracyError):
    """An operation requiring a valid model was given one with errors."""

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class ExportParseError(TracyError):
    """An issue-tracker export could not be parsed at all."""
