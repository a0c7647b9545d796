"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class TvrError(Exception):
    """Base class for all engine errors."""


class SqlError(TvrError):
    """Lex, parse, or validation failure in SQL text, tagged with a position.

    Rendered as the single-line diagnostic `error: <msg> at line L, col C`.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.col is None:
            return f"{self.message} at line {self.line}"
        return f"{self.message} at line {self.line}, col {self.col}"


class LogError(TvrError):
    """Schema DDL or event-log file failure, tagged with a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"{self.message} at line {self.line}"


class RetractionUnderflow(TvrError):
    """An undo/DELETE targeted a row that is not present in the bag."""


class InternalError(TvrError):
    """Invariant breach that indicates a planner or engine bug, not bad input."""
