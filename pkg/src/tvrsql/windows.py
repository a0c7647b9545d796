"""Tumble and Hop window assignment.

Windows are right-open intervals [wstart, wend). Tumbling windows partition
the time line into disjoint covering intervals of width `dur`; hopping windows
start every `hopsize` minutes and may overlap (hopsize < dur) or leave gaps
(hopsize > dur, in which case a timestamp can fall into no window at all).
Floor division toward minus infinity keeps the partition correct for
timestamps below the offset.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TvrError
from .model import ColumnDef, Kind, Relation, Schema
from .times import Duration, Timestamp

ZERO = Duration(0)


@dataclass(frozen=True)
class WindowSpec:
    kind: str  # "tumble" | "hop"
    timecol: str
    dur: Duration
    hopsize: Duration | None = None
    offset: Duration = ZERO

    def __post_init__(self) -> None:
        if self.kind not in ("tumble", "hop"):
            raise TvrError(f"unknown window kind {self.kind!r}")
        if self.dur.minutes <= 0:
            raise TvrError("window dur must be positive")
        if self.kind == "hop" and (self.hopsize is None or self.hopsize.minutes <= 0):
            raise TvrError("hop requires a positive hopsize")


def tumble_assign(t: Timestamp, dur: Duration, offset: Duration = ZERO) -> tuple[Timestamp, Timestamp]:
    """The unique window [wstart, wend) containing `t`."""
    if t.is_bottom:
        raise TvrError("cannot window BOTTOM")
    d = dur.minutes
    start = offset.minutes + ((t.minutes - offset.minutes) // d) * d
    return Timestamp.of(start), Timestamp.of(start + d)


def hop_assign(
    t: Timestamp, dur: Duration, hopsize: Duration, offset: Duration = ZERO
) -> list[tuple[Timestamp, Timestamp]]:
    """All windows [offset + k*hopsize, ... + dur) containing `t`, ascending."""
    if t.is_bottom:
        raise TvrError("cannot window BOTTOM")
    rel = t.minutes - offset.minutes
    hop, d = hopsize.minutes, dur.minutes
    k_max = rel // hop
    k_min = (rel - d) // hop + 1
    out = []
    for k in range(k_min, k_max + 1):
        start = offset.minutes + k * hop
        out.append((Timestamp.of(start), Timestamp.of(start + d)))
    return out


def assign(t: Timestamp, spec: WindowSpec) -> list[tuple[Timestamp, Timestamp]]:
    if spec.kind == "tumble":
        return [tumble_assign(t, spec.dur, spec.offset)]
    return hop_assign(t, spec.dur, spec.hopsize, spec.offset)


def windowed_schema(input_schema: Schema, timecol: str) -> Schema:
    """Input schema extended with leading event-time wstart/wend columns."""
    idx = input_schema.index_of(timecol)
    if not input_schema.columns[idx].is_event_time:
        raise TvrError(f"window timecol {timecol!r} is not an event-time column")
    bounds = (
        ColumnDef("wstart", Kind.TIMESTAMP, is_event_time=True),
        ColumnDef("wend", Kind.TIMESTAMP, is_event_time=True),
    )
    return Schema(bounds + input_schema.columns, bounded=input_schema.bounded)


def apply_window_tvf(input_relation: Relation, spec: WindowSpec) -> Relation:
    """One output row per (input row, assigned window), bounds prepended."""
    schema = windowed_schema(input_relation.schema, spec.timecol)
    t_index = input_relation.schema.index_of(spec.timecol)
    out = Relation(schema)
    for row, n in input_relation.bag.items():
        t = row[t_index]
        if t is None:
            raise TvrError("NULL event timestamp cannot be windowed")
        for wstart, wend in assign(t, spec):
            out.add((wstart, wend) + row, n)
    return out
