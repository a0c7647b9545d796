"""Relational core: typed schemas, bag-semantics relations, watermark state,
and the changelog algebra (diff, fold, completeness) everything else builds on.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import InternalError, RetractionUnderflow, TvrError
from .times import BOTTOM, Duration, Timestamp


class Kind(enum.Enum):
    INTEGER = "INT"
    TEXT = "STRING"
    TIMESTAMP = "TIMESTAMP"
    DURATION = "INTERVAL"
    BOOLEAN = "BOOLEAN"

    def __str__(self) -> str:
        return self.value


# A cell is a plain Python value; None is SQL NULL. Columns are typed, so a
# bag never mixes bool and int in one position (their hash collision is moot).
Value = "int | str | bool | Timestamp | Duration | None"
Row = tuple


def value_kind(v) -> Kind | None:
    if v is None:
        return None
    if isinstance(v, bool):
        return Kind.BOOLEAN
    if isinstance(v, int):
        return Kind.INTEGER
    if isinstance(v, str):
        return Kind.TEXT
    if isinstance(v, Timestamp):
        return Kind.TIMESTAMP
    if isinstance(v, Duration):
        return Kind.DURATION
    raise InternalError(f"unsupported value {v!r}")


_KIND_RANK = {None: 0, Kind.BOOLEAN: 1, Kind.INTEGER: 2, Kind.DURATION: 3, Kind.TIMESTAMP: 4, Kind.TEXT: 5}


def sort_key(v) -> tuple:
    """Total order over cell values: NULL first, then by kind, then by value."""
    k = value_kind(v)
    rank = _KIND_RANK[k]
    if v is None:
        return (rank, 0)
    if k is Kind.TIMESTAMP:
        return (rank, 0 if v.is_bottom else 1, 0 if v.is_bottom else v.minutes)
    if k is Kind.DURATION:
        return (rank, v.minutes)
    return (rank, v)


def row_key(row: Row) -> tuple:
    return tuple(sort_key(v) for v in row)


def format_value(v, col: ColumnDef | None = None) -> str:
    """Render one cell the way logs and tables print it (`$`-hint aware)."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int) and col is not None and col.fmt:
        return f"{col.fmt}{v}"
    return str(v)


@dataclass(frozen=True)
class ColumnDef:
    """One column: name (declared spelling), kind, event-time flag, display hint."""

    name: str
    kind: Kind
    is_event_time: bool = False
    fmt: str | None = None

    def __post_init__(self) -> None:
        if self.is_event_time and self.kind is not Kind.TIMESTAMP:
            raise TvrError(f"column {self.name}: EVENTTIME requires TIMESTAMP, got {self.kind}")


@dataclass(frozen=True)
class Schema:
    """Ordered column metadata; `bounded` marks a finite (TABLE) source."""

    columns: tuple[ColumnDef, ...]
    bounded: bool = False

    def __post_init__(self) -> None:
        seen = set()
        for col in self.columns:
            low = col.name.lower()
            if low in seen:
                raise TvrError(f"duplicate column name {col.name!r}")
            seen.add(low)

    @property
    def arity(self) -> int:
        return len(self.columns)

    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index_of(self, name: str) -> int:
        low = name.lower()
        for i, c in enumerate(self.columns):
            if c.name.lower() == low:
                return i
        raise TvrError(f"unknown column {name!r}")

    def event_time_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.columns) if c.is_event_time)

    def signature(self) -> tuple:
        return tuple((c.name.lower(), c.kind) for c in self.columns)


class Relation:
    """A bag (multiset) of rows over a schema. Duplicates are counted."""

    def __init__(self, schema: Schema, rows: Iterable[Row] = ()):
        self.schema = schema
        self.bag: Counter = Counter()
        for row in rows:
            self.add(row)

    def add(self, row: Row, count: int = 1) -> None:
        row = tuple(row)
        if len(row) != self.schema.arity:
            raise TvrError(f"row arity {len(row)} != schema arity {self.schema.arity}")
        self.bag[row] += count

    def remove(self, row: Row) -> None:
        row = tuple(row)
        if self.bag[row] <= 0:
            raise RetractionUnderflow(f"retraction underflow: {row!r} not present")
        self.bag[row] -= 1
        if self.bag[row] == 0:
            del self.bag[row]

    def rows(self) -> list[Row]:
        out: list[Row] = []
        for row, n in self.bag.items():
            out.extend([row] * n)
        return out

    def sorted_rows(self) -> list[Row]:
        return sorted(self.rows(), key=row_key)

    def __len__(self) -> int:
        return sum(self.bag.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.schema.signature() == other.schema.signature() and self.bag == other.bag

    def __repr__(self) -> str:
        return f"Relation({self.schema.names()}, {self.sorted_rows()!r})"


# ---------------------------------------------------------------------------
# Watermarks
# ---------------------------------------------------------------------------


@dataclass
class WatermarkState:
    """Per (source, event-time column): strictly increasing (ptime, value) pairs."""

    entries: dict[tuple[str, str], list[tuple[Timestamp, Timestamp]]] = field(default_factory=dict)

    @staticmethod
    def _key(source: str, column: str) -> tuple[str, str]:
        return (source.lower(), column.lower())

    def register(self, source: str, column: str) -> None:
        """Declare a watermarked column (so lookups yield BOTTOM, not an error)."""
        self.entries.setdefault(self._key(source, column), [])

    def advance(self, source: str, column: str, ptime: Timestamp, value: Timestamp) -> None:
        seq = self.entries.setdefault(self._key(source, column), [])
        if seq:
            last_p, last_v = seq[-1]
            if not last_p < ptime:
                raise TvrError(f"watermark ptime {ptime} not after {last_p} for {source}.{column}")
            if not last_v < value:
                raise TvrError(f"watermark {value} not above previous {last_v} for {source}.{column}")
        seq.append((ptime, value))

    def columns(self) -> list[tuple[str, str]]:
        return sorted(self.entries)

    def value_at(self, source: str, column: str, ptime: Timestamp) -> Timestamp:
        seq = self.entries.get(self._key(source, column))
        if seq is None:
            raise TvrError(f"no watermark declared for {source}.{column}")
        i = bisect_right(seq, ptime, key=lambda e: e[0])
        return seq[i - 1][1] if i else BOTTOM


def watermark_at(state: WatermarkState, source_column: str, ptime: Timestamp) -> Timestamp:
    """Latest watermark value recorded at or before `ptime`; BOTTOM if none.

    `source_column` is the dotted `source.column` identifier.
    """
    source, _, column = source_column.partition(".")
    if not column:
        raise TvrError(f"expected source.column identifier, got {source_column!r}")
    return state.value_at(source, column, ptime)


def is_complete(key: Timestamp, watermark: Timestamp) -> bool:
    """Whether a grouping keyed at event time `key` is complete under `watermark`."""
    if key.is_bottom:
        raise TvrError("completeness key must be finite")
    return key <= watermark


# ---------------------------------------------------------------------------
# Changelogs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangelogRow:
    """One change: the output row, retraction flag, processing time, version."""

    row: Row
    undo: bool
    ptime: Timestamp
    ver: int


def relation_diff(
    old: Relation,
    new: Relation,
    ptime: Timestamp,
    ver_state: dict[tuple, int],
    key_indices: Sequence[int] | None = None,
) -> list[ChangelogRow]:
    """Changelog rows turning bag `old` into bag `new`, stamped with `ptime`.

    All undos precede all inserts; each group is ordered by window key then
    row value. `ver_state` maps window keys to the next version number and is
    mutated in place. The window key projects the row onto `key_indices`
    (default: the schema's event-time columns; empty means one global key).
    """
    if old.schema.signature() != new.schema.signature():
        raise InternalError("relation_diff across different schemas")
    if key_indices is None:
        key_indices = old.schema.event_time_indices()

    def wkey(row: Row) -> tuple:
        return tuple(row[i] for i in key_indices)

    removed = old.bag - new.bag
    added = new.bag - old.bag
    out: list[ChangelogRow] = []
    for bag, undo in ((removed, True), (added, False)):
        rows: list[Row] = []
        for row, n in bag.items():
            rows.extend([row] * n)
        rows.sort(key=lambda r: (row_key(wkey(r)), row_key(r)))
        for row in rows:
            k = wkey(row)
            ver = ver_state.get(k, 0)
            ver_state[k] = ver + 1
            out.append(ChangelogRow(row, undo, ptime, ver))
    return out


def changelog_fold(rows: Sequence[ChangelogRow], upto: Timestamp, schema: Schema) -> Relation:
    """Replay changelog rows with ptime <= `upto` into a bag, starting empty."""
    result = Relation(schema)
    last = BOTTOM
    for cr in rows:
        if cr.ptime < last:
            raise TvrError(f"changelog ptime {cr.ptime} decreases after {last}")
        last = cr.ptime
        if upto < cr.ptime:
            continue
        if cr.undo:
            result.remove(cr.row)
        else:
            result.add(cr.row)
    return result
