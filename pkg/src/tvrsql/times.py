"""The shared time domain: exact integer minutes plus a BOTTOM sentinel.

Event time and processing time live on the same totally ordered axis so
watermark comparisons never need case analysis. BOTTOM sits strictly below
every finite instant and stands in for "no watermark yet" / "before the log".
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass

from .errors import TvrError

_TIME_RE = re.compile(r"^(-?\d+):(\d{2})$")


@functools.total_ordering
@dataclass(frozen=True)
class Timestamp:
    """An instant, in whole minutes, or the BOTTOM sentinel (minutes=None)."""

    _minutes: int | None

    @staticmethod
    def of(minutes: int) -> Timestamp:
        return Timestamp(int(minutes))

    @staticmethod
    def parse(text: str) -> Timestamp:
        """Parse `H:MM` (hours unpadded or zero-padded, minutes two digits)."""
        m = _TIME_RE.match(text.strip())
        if not m:
            raise TvrError(f"bad timestamp {text!r}, expected H:MM")
        hours, mins = int(m.group(1)), int(m.group(2))
        return Timestamp(hours * 60 + mins)

    @property
    def is_bottom(self) -> bool:
        return self._minutes is None

    @property
    def minutes(self) -> int:
        if self._minutes is None:
            raise TvrError("BOTTOM has no minute value")
        return self._minutes

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Timestamp):
            return NotImplemented
        if self._minutes is None:
            return other._minutes is not None
        if other._minutes is None:
            return False
        return self._minutes < other._minutes

    def __add__(self, other: Duration) -> Timestamp:
        if not isinstance(other, Duration):
            return NotImplemented
        return Timestamp(self.minutes + other.minutes)

    def __sub__(self, other: Duration) -> Timestamp:
        if not isinstance(other, Duration):
            return NotImplemented
        return Timestamp(self.minutes - other.minutes)

    def __str__(self) -> str:
        if self._minutes is None:
            return "BOTTOM"
        hours, mins = divmod(self._minutes, 60)
        return f"{hours}:{mins:02d}"

    def __repr__(self) -> str:
        return f"Timestamp({self})"


BOTTOM = Timestamp(None)


@functools.total_ordering
@dataclass(frozen=True)
class Duration:
    """A non-negative span of whole minutes."""

    minutes: int

    def __post_init__(self) -> None:
        if self.minutes < 0:
            raise TvrError(f"duration must be non-negative, got {self.minutes}")

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Duration):
            return NotImplemented
        return self.minutes < other.minutes

    def __add__(self, other: Duration) -> Duration:
        if not isinstance(other, Duration):
            return NotImplemented
        return Duration(self.minutes + other.minutes)

    def __str__(self) -> str:
        return f"{self.minutes} min"

    def __repr__(self) -> str:
        return f"Duration({self.minutes})"


def minutes(n: int) -> Duration:
    return Duration(n)
