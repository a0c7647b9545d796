"""Schema DDL and processing-time-ordered event logs.

A log is a text file of `<ptime> INSERT (...)`, `<ptime> DELETE (...)`, and
`<ptime> WM [col] -> <value>` lines, non-decreasing in ptime. Snapshots
materialize the bag visible at any processing time; watermark lines feed the
monotone watermark function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .errors import LogError, RetractionUnderflow, TvrError
from .model import ChangelogRow, ColumnDef, Kind, Relation, Row, Schema, WatermarkState, format_value
from .times import BOTTOM, Timestamp


@dataclass(frozen=True)
class Insert:
    row: Row


@dataclass(frozen=True)
class Delete:
    row: Row


@dataclass(frozen=True)
class WatermarkAdvance:
    column: str
    value: Timestamp


@dataclass(frozen=True)
class LogEntry:
    ptime: Timestamp
    payload: Insert | Delete | WatermarkAdvance


@dataclass(frozen=True)
class SourceLog:
    name: str
    schema: Schema
    entries: tuple[LogEntry, ...] = ()

    def max_ptime(self) -> Timestamp:
        return self.entries[-1].ptime if self.entries else BOTTOM


@dataclass
class Catalog:
    sources: dict[str, SourceLog] = field(default_factory=dict)

    def define(self, log: SourceLog) -> None:
        low = log.name.lower()
        if low in self.sources:
            raise TvrError(f"duplicate source name {log.name!r}")
        self.sources[low] = log

    def get(self, name: str) -> SourceLog:
        try:
            return self.sources[name.lower()]
        except KeyError:
            raise TvrError(f"unknown source {name!r}") from None

    def has(self, name: str) -> bool:
        return name.lower() in self.sources

    def attach_log(self, name: str, text: str) -> SourceLog:
        log = self.get(name)
        loaded = parse_log(text, log.schema, name=log.name)
        self.sources[name.lower()] = loaded
        return loaded

    def max_ptime(self) -> Timestamp:
        return max((log.max_ptime() for log in self.sources.values()), default=BOTTOM)

    def watermark_state(self) -> WatermarkState:
        state = WatermarkState()
        for log in self.sources.values():
            merge_watermarks(log, state)
        return state


# ---------------------------------------------------------------------------
# Schema DDL
# ---------------------------------------------------------------------------

_DDL_STMT_RE = re.compile(
    r"CREATE\s+(STREAM|TABLE)\s+([A-Za-z_][A-Za-z_0-9]*)\s*\((.*)\)\s*$",
    re.IGNORECASE | re.DOTALL,
)
_COL_RE = re.compile(
    r"^([A-Za-z_][A-Za-z_0-9]*)\s+([A-Za-z]+)"
    r"(\s+EVENTTIME)?"
    r"(?:\s+FORMAT\s+'([^']*)')?$",
    re.IGNORECASE,
)

_DDL_KINDS = {
    "INT": Kind.INTEGER,
    "INTEGER": Kind.INTEGER,
    "STRING": Kind.TEXT,
    "VARCHAR": Kind.TEXT,
    "TIMESTAMP": Kind.TIMESTAMP,
    "BOOLEAN": Kind.BOOLEAN,
    "INTERVAL": Kind.DURATION,
}


def parse_schema_ddl(text: str) -> Catalog:
    """Parse `CREATE STREAM|TABLE name (col TYPE [EVENTTIME] [FORMAT '$'], ...);`
    statements into a catalog of empty source logs."""
    catalog = Catalog()
    # Map each statement back to the line its CREATE starts on for diagnostics.
    pos = 0
    for stmt in text.split(";"):
        line_no = text.count("\n", 0, pos + (len(stmt) - len(stmt.lstrip()))) + 1
        pos += len(stmt) + 1
        stripped = stmt.strip()
        if not stripped or all(ln.lstrip().startswith("#") for ln in stripped.splitlines()):
            continue
        stripped = "\n".join(ln for ln in stripped.splitlines() if not ln.lstrip().startswith("#")).strip()
        if not stripped:
            continue
        m = _DDL_STMT_RE.match(stripped)
        if not m:
            raise LogError(f"bad statement {stripped.splitlines()[0]!r}", line_no)
        bounded = m.group(1).upper() == "TABLE"
        name = m.group(2)
        columns = []
        for coltext in m.group(3).split(","):
            coltext = " ".join(coltext.split())
            cm = _COL_RE.match(coltext)
            if not cm:
                raise LogError(f"bad column definition {coltext!r}", line_no)
            colname, kindword, et, fmt = cm.group(1), cm.group(2), cm.group(3), cm.group(4)
            kind = _DDL_KINDS.get(kindword.upper())
            if kind is None:
                raise LogError(f"unknown type {kindword!r}", line_no)
            if et and kind is not Kind.TIMESTAMP:
                raise LogError(f"EVENTTIME requires TIMESTAMP on column {colname!r}", line_no)
            columns.append(ColumnDef(colname, kind, is_event_time=bool(et), fmt=fmt))
        try:
            schema = Schema(tuple(columns), bounded=bounded)
            catalog.define(SourceLog(name, schema))
        except TvrError as exc:
            raise LogError(str(exc), line_no) from None
    return catalog


# ---------------------------------------------------------------------------
# Event logs
# ---------------------------------------------------------------------------

_WM_RE = re.compile(r"^(\S+)\s+WM(?:\s+([A-Za-z_][A-Za-z_0-9]*))?\s*->\s*(\S+)$")
_DATA_RE = re.compile(r"^(\S+)\s+(INSERT|DELETE)\s*\((.*)\)\s*$", re.IGNORECASE)
_INT_RE = re.compile(r"^-?\d+$")
_TIME_TOKEN_RE = re.compile(r"^-?\d+:\d{2}$")


def _parse_cell(token: str, col: ColumnDef, line_no: int):
    token = token.strip()
    if col.fmt and token.startswith(col.fmt):
        token = token[len(col.fmt):]
    if col.kind is Kind.INTEGER:
        if token.startswith("$"):
            token = token[1:]
        if not _INT_RE.match(token):
            raise LogError(f"bad integer {token!r} for column {col.name}", line_no)
        return int(token)
    if col.kind is Kind.TIMESTAMP:
        if not _TIME_TOKEN_RE.match(token):
            raise LogError(f"bad timestamp {token!r} for column {col.name}", line_no)
        return Timestamp.parse(token)
    if col.kind is Kind.BOOLEAN:
        if token.lower() not in ("true", "false"):
            raise LogError(f"bad boolean {token!r} for column {col.name}", line_no)
        return token.lower() == "true"
    return token


def _split_tuple(body: str) -> list[str]:
    if not body.strip():
        return []
    return [part.strip() for part in body.split(",")]


def parse_log(text: str, schema: Schema, name: str = "") -> SourceLog:
    """Parse one event log against `schema`. Order is verified, never repaired."""
    entries: list[LogEntry] = []
    wm_last: dict[str, Timestamp] = {}
    last_ptime = BOTTOM
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _WM_RE.match(line)
        if m:
            ptime_tok, column, value_tok = m.group(1), m.group(2), m.group(3)
            try:
                ptime = Timestamp.parse(ptime_tok)
                value = Timestamp.parse(value_tok)
            except TvrError as exc:
                raise LogError(str(exc), line_no) from None
            if column is None:
                et = schema.event_time_indices()
                if len(et) != 1:
                    raise LogError("WM line must name a column unless exactly one event-time column exists", line_no)
                column = schema.columns[et[0]].name
            else:
                matches = [c for c in schema.columns if c.name.lower() == column.lower()]
                if not matches or not matches[0].is_event_time:
                    raise LogError(f"WM names non-event-time column {column!r}", line_no)
                column = matches[0].name
            low = column.lower()
            if low in wm_last and not wm_last[low] < value:
                raise LogError(f"watermark {value} not above previous {wm_last[low]}", line_no)
            wm_last[low] = value
            payload: Insert | Delete | WatermarkAdvance = WatermarkAdvance(column, value)
        else:
            m = _DATA_RE.match(line)
            if not m:
                raise LogError(f"unrecognized log line {line!r}", line_no)
            ptime_tok, op, body = m.group(1), m.group(2).upper(), m.group(3)
            try:
                ptime = Timestamp.parse(ptime_tok)
            except TvrError as exc:
                raise LogError(str(exc), line_no) from None
            tokens = _split_tuple(body)
            if len(tokens) != schema.arity:
                raise LogError(f"expected {schema.arity} values, got {len(tokens)}", line_no)
            row = tuple(_parse_cell(t, c, line_no) for t, c in zip(tokens, schema.columns))
            payload = Insert(row) if op == "INSERT" else Delete(row)
        if ptime < last_ptime:
            raise LogError(f"ptime {ptime} out of order (after {last_ptime})", line_no)
        last_ptime = ptime
        entries.append(LogEntry(ptime, payload))
    return SourceLog(name, schema, tuple(entries))


def snapshot(log: SourceLog, ptime: Timestamp) -> Relation:
    """The bag of rows visible at processing time `ptime`."""
    result = Relation(log.schema)
    for entry in log.entries:
        if ptime < entry.ptime:
            break
        if isinstance(entry.payload, Insert):
            result.add(entry.payload.row)
        elif isinstance(entry.payload, Delete):
            try:
                result.remove(entry.payload.row)
            except RetractionUnderflow:
                raise RetractionUnderflow(
                    f"retraction underflow: DELETE {entry.payload.row!r} at {entry.ptime} has no matching insert"
                ) from None
    return result


def watermark_state(log: SourceLog) -> WatermarkState:
    """All watermark advances of one log, keyed by (source, column)."""
    state = WatermarkState()
    merge_watermarks(log, state)
    return state


def merge_watermarks(log: SourceLog, state: WatermarkState) -> None:
    for col in log.schema.columns:
        if col.is_event_time:
            state.register(log.name, col.name)
    for entry in log.entries:
        if isinstance(entry.payload, WatermarkAdvance):
            state.advance(log.name, entry.payload.column, entry.ptime, entry.payload.value)


def serialize_changelog(rows: list[ChangelogRow], schema: Schema) -> str:
    """Render a changelog as a reloadable log: undo -> DELETE, insert -> INSERT."""
    lines = []
    for cr in rows:
        op = "DELETE" if cr.undo else "INSERT"
        cells = ", ".join(format_value(v, c) for v, c in zip(cr.row, schema.columns))
        lines.append(f"{cr.ptime}    {op} ({cells})")
    return "\n".join(lines) + ("\n" if lines else "")


def bounded_copy(log: SourceLog, bounded: bool) -> SourceLog:
    """Same log with the schema's boundedness flag replaced (test helper)."""
    return replace(log, schema=Schema(log.schema.columns, bounded=bounded))
