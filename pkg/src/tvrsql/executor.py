"""Plan evaluation: point-in-time tables, watermark-gated tables, and
changelog streams under every EMIT mode.

The reference strategy is deterministic replay-and-diff: walk the log entries
of all referenced sources in processing-time order (data entries before
watermark entries before delay-timer fires at equal ptime), recompute the
materialized view after each step, and emit the bag difference as changelog
rows. Correctness over cleverness; everything here is desk scale.

Rows flow through the plan tagged with their arrival ptime and the watermark
snapshot in effect when they arrived, which is what the aggregate late-input
rule needs: a row is dropped by an aggregate when its event-time key was
already complete at the moment the row arrived.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import InternalError, TvrError
from .eventlog import Catalog, Delete, Insert, WatermarkAdvance
from .model import (
    ChangelogRow,
    Relation,
    Row,
    WatermarkState,
    is_complete,
    relation_diff,
    row_key,
    sort_key,
)
from .parser import EmitSpec
from .times import BOTTOM, Duration, Timestamp
from .validate import (
    Aggregate,
    AggOut,
    AndExpr,
    ArithExpr,
    ColExpr,
    CmpExpr,
    Filter,
    Join,
    KeyOut,
    LitExpr,
    PlanColumn,
    Project,
    Scan,
    WindowTvf,
    plan_sources,
    window_key_indices,
)
from .windows import hop_assign, tumble_assign


@dataclass
class EvalContext:
    """One evaluation's inputs: catalog, processing-time cursor, watermarks."""

    catalog: Catalog
    cursor: Timestamp
    watermark_state: WatermarkState

    @staticmethod
    def at(catalog: Catalog, cursor: Timestamp) -> EvalContext:
        return EvalContext(catalog, cursor, catalog.watermark_state())


@dataclass(frozen=True)
class _TRow:
    """A row plus arrival metadata (ptime and per-column watermark snapshot)."""

    row: Row
    arrival: Timestamp
    awm: tuple[tuple[tuple[str, str], Timestamp], ...] = ()

    def awm_value(self, source_col: tuple[str, str]) -> Timestamp:
        for key, value in self.awm:
            if key == source_col:
                return value
        return BOTTOM


def _untagged(relation: Relation) -> list[_TRow]:
    return [_TRow(row, BOTTOM) for row in relation.rows()]


def _effective(wm: Timestamp, col: PlanColumn) -> Timestamp:
    if wm.is_bottom or col.wm_shift == 0:
        return wm
    return wm - Duration(col.wm_shift)


# ---------------------------------------------------------------------------
# Classical evaluation over tagged rows
# ---------------------------------------------------------------------------


def _eval(plan, bags: dict[str, list[_TRow]]) -> list[_TRow]:
    if isinstance(plan, Scan):
        try:
            return bags[plan.source]
        except KeyError:
            raise TvrError(f"no input relation for source {plan.source!r}") from None
    if isinstance(plan, WindowTvf):
        rows = _eval(plan.input, bags)
        out = []
        for trow in rows:
            t = trow.row[plan.timecol_index]
            if t is None:
                raise TvrError("NULL event timestamp cannot be windowed")
            if plan.kind == "tumble":
                windows = [tumble_assign(t, plan.dur, plan.offset)]
            else:
                windows = hop_assign(t, plan.dur, plan.hopsize, plan.offset)
            for wstart, wend in windows:
                out.append(_TRow((wstart, wend) + trow.row, trow.arrival, trow.awm))
        return out
    if isinstance(plan, Filter):
        rows = _eval(plan.input, bags)
        return [t for t in rows if _eval_expr(plan.predicate, t.row) is True]
    if isinstance(plan, Project):
        rows = _eval(plan.input, bags)
        return [
            _TRow(tuple(_eval_expr(e, t.row) for e in plan.exprs), t.arrival, t.awm) for t in rows
        ]
    if isinstance(plan, Join):
        left = _eval(plan.left, bags)
        right = _eval(plan.right, bags)
        out = []
        for lt in left:
            for rt in right:
                row = lt.row + rt.row
                if plan.predicate is not None and _eval_expr(plan.predicate, row) is not True:
                    continue
                out.append(_TRow(row, max(lt.arrival, rt.arrival), _merge_awm(lt.awm, rt.awm)))
        return out
    if isinstance(plan, Aggregate):
        return _eval_aggregate(plan, _eval(plan.input, bags))
    raise InternalError(f"not a plan node: {plan!r}")


def _merge_awm(a, b):
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for key, value in b:
        if key not in merged or merged[key] < value:
            merged[key] = value
    return tuple(sorted(merged.items()))


def _is_late(plan: Aggregate, trow: _TRow) -> bool:
    """Extension of completeness to inputs: a row is late when every flagged
    event-time grouping key was already at or below the watermark in effect
    when the row arrived."""
    checked = False
    for i in plan.key_indices:
        col = plan.input.schema.columns[i]
        if not col.is_event_time or col.wm_source is None:
            continue
        checked = True
        key = trow.row[i]
        wm = _effective(trow.awm_value(col.wm_source), col)
        if key is None or not is_complete(key, wm):
            return False
    return checked


def _eval_aggregate(plan: Aggregate, rows: list[_TRow]) -> list[_TRow]:
    groups: dict[tuple, list[_TRow]] = {}
    for trow in rows:
        if _is_late(plan, trow):
            continue
        key = tuple(trow.row[i] for i in plan.key_indices)
        groups.setdefault(key, []).append(trow)
    out = []
    for members in groups.values():
        values = []
        for item in plan.items:
            if isinstance(item, KeyOut):
                values.append(members[0].row[item.index])
            else:
                values.append(_agg_value(item, [m.row for m in members]))
        arrival = max(m.arrival for m in members)
        awm: tuple = ()
        for m in members:
            awm = _merge_awm(awm, m.awm)
        out.append(_TRow(tuple(values), arrival, awm))
    return out


def _agg_value(agg: AggOut, rows: list[Row]):
    if agg.arg is None:  # COUNT(*)
        return len(rows)
    values = [v for v in (_eval_expr(agg.arg, row) for row in rows) if v is not None]
    if agg.func == "COUNT":
        return len(values)
    if not values:
        return None
    if agg.func == "MAX":
        return max(values, key=sort_key)
    if agg.func == "MIN":
        return min(values, key=sort_key)
    if agg.func == "SUM":
        total = values[0]
        for v in values[1:]:
            total = total + v
        return total
    raise InternalError(f"unknown aggregate {agg.func!r}")


def eval_aggregate_functions(group: list[Row], aggs: list[AggOut]) -> Row:
    """Aggregate values over one non-empty group of rows."""
    if not group:
        raise TvrError("aggregate group must be non-empty")
    return tuple(_agg_value(a, list(group)) for a in aggs)


def _eval_expr(expr, row: Row):
    if isinstance(expr, ColExpr):
        return row[expr.index]
    if isinstance(expr, LitExpr):
        return expr.value
    if isinstance(expr, ArithExpr):
        left = _eval_expr(expr.left, row)
        right = _eval_expr(expr.right, row)
        if left is None or right is None:
            return None
        if expr.op == "+":
            return left + right
        if isinstance(left, Duration) and isinstance(right, Duration):
            return Duration(left.minutes - right.minutes)
        return left - right
    if isinstance(expr, CmpExpr):
        left = _eval_expr(expr.left, row)
        right = _eval_expr(expr.right, row)
        if left is None or right is None:
            return None
        if expr.op == "=":
            return left == right
        if expr.op == "<":
            return left < right
        if expr.op == "<=":
            return left <= right
        if expr.op == ">":
            return right < left
        return right <= left
    if isinstance(expr, AndExpr):
        left = _eval_expr(expr.left, row)
        right = _eval_expr(expr.right, row)
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    raise InternalError(f"not a typed expression: {expr!r}")


# ---------------------------------------------------------------------------
# Public evaluation entry points
# ---------------------------------------------------------------------------


def eval_relational(plan, inputs: dict[str, Relation]) -> Relation:
    """Classical pointwise evaluation over plain relations (no arrival tags,
    hence no late-input drops; see eval_table for watermark-aware runs)."""
    bags = {name.lower(): _untagged(rel) for name, rel in inputs.items()}
    rows = _eval(plan, bags)
    return _to_relation(plan, rows)


def _to_relation(plan, rows: list[_TRow]) -> Relation:
    result = Relation(plan.schema.to_schema())
    for trow in rows:
        result.add(trow.row)
    return result


def eval_table(plan, ctx: EvalContext, emit: EmitSpec) -> Relation:
    """The query as a table at ctx.cursor, honoring table-mode EMIT gates."""
    if emit.stream:
        raise TvrError("eval_table requires a non-stream EMIT spec")
    if emit.delay is not None:
        replay = _Replay(plan, ctx.catalog, emit)
        replay.run(ctx.cursor)
        return replay.materialized_relation()
    bags = _tagged_snapshots(plan, ctx.catalog, ctx.cursor)
    rows = _eval(plan, bags)
    if emit.after_watermark:
        def lookup(source_col):
            return ctx.watermark_state.value_at(source_col[0], source_col[1], ctx.cursor)

        rows = [t for t in rows if _row_complete(plan.schema.columns, t.row, lookup)]
    return _to_relation(plan, rows)


def eval_stream(
    plan,
    ctx: EvalContext,
    emit: EmitSpec,
    from_: Timestamp = BOTTOM,
    to: Timestamp | None = None,
) -> list[ChangelogRow]:
    """Changelog rows of the query's evolution, replayed from the log origin,
    restricted to from_ <= ptime <= to (default to = ctx.cursor)."""
    if not emit.stream:
        raise TvrError("eval_stream requires EMIT STREAM")
    if to is None:
        to = ctx.cursor
    if to < from_:
        raise TvrError("stream range is empty: to < from")
    replay = _Replay(plan, ctx.catalog, emit)
    rows = replay.run(to)
    return [cr for cr in rows if from_ <= cr.ptime]


def replay_checkpoints(plan, ctx: EvalContext, emit: EmitSpec) -> list[tuple[Timestamp, Relation]]:
    """(ptime, materialized view) after each distinct log ptime up to the
    cursor; the view honors the EMIT mode's materialization discipline."""
    replay = _Replay(plan, ctx.catalog, emit)
    replay.run(ctx.cursor)
    return replay.checkpoints


def _row_complete(columns, row: Row, lookup) -> bool:
    for i, col in enumerate(columns):
        if not col.is_event_time or col.wm_source is None:
            continue
        value = row[i]
        if value is None or not is_complete(value, _effective(lookup(col.wm_source), col)):
            return False
    return True


def _tagged_snapshots(plan, catalog: Catalog, cursor: Timestamp) -> dict[str, list[_TRow]]:
    bags: dict[str, list[_TRow]] = {}
    for name in plan_sources(plan):
        log = catalog.get(name)
        rows: list[_TRow] = []
        wm: dict[tuple[str, str], Timestamp] = {}
        for entry in log.entries:
            if cursor < entry.ptime:
                break
            _apply_entry(rows, wm, log.name.lower(), entry.ptime, entry.payload)
        bags[name] = rows
    return bags


def _apply_entry(rows: list[_TRow], wm: dict, source: str, ptime: Timestamp, payload) -> None:
    if isinstance(payload, Insert):
        rows.append(_TRow(payload.row, ptime, tuple(sorted(wm.items()))))
    elif isinstance(payload, Delete):
        for i, trow in enumerate(rows):
            if trow.row == payload.row:
                del rows[i]
                return
        raise TvrError(f"retraction underflow: DELETE {payload.row!r} at {ptime}")
    else:
        wm[(source, payload.column.lower())] = payload.value


# ---------------------------------------------------------------------------
# Replay engine
# ---------------------------------------------------------------------------


@dataclass
class DelayTimerState:
    """Per window key: the pending fire time and the rows last materialized."""

    pending_fire: Timestamp | None = None
    last_materialized: Counter = field(default_factory=Counter)
    final: bool = False


class _Replay:
    """Deterministic replay of all source logs under one EMIT discipline."""

    def __init__(self, plan, catalog: Catalog, emit: EmitSpec):
        self.plan = plan
        self.emit = emit
        self.schema = plan.schema.to_schema()
        self.columns = plan.schema.columns
        keys = window_key_indices(plan)
        self.key_indices = keys if keys else plan.schema.event_time_indices()
        self.ver_state: dict[tuple, int] = {}
        self.catalog = catalog

        events = []
        for name in sorted(plan_sources(plan)):
            log = catalog.get(name)
            for seq, entry in enumerate(log.entries):
                rank = 1 if isinstance(entry.payload, WatermarkAdvance) else 0
                events.append((entry.ptime, rank, seq, name, entry.payload))
        events.sort(key=lambda e: (sort_key(e[0]), e[1], e[3], e[2]))
        self.events = events

        self.bags: dict[str, list[_TRow]] = {name: [] for name in plan_sources(plan)}
        self.wm: dict[tuple[str, str], Timestamp] = {}
        self.prev_view: Counter = Counter()
        self.timers: dict[tuple, DelayTimerState] = {}
        self.emitted: list[ChangelogRow] = []
        self.checkpoints: list[tuple[Timestamp, Relation]] = []

    # -- driving ------------------------------------------------------------

    def run(self, to: Timestamp) -> list[ChangelogRow]:
        events = [e for e in self.events if not to < e[0]]
        i = 0
        while i < len(events):
            ptime = events[i][0]
            self._fire_timers(ptime, inclusive=False)
            while i < len(events) and events[i][0] == ptime:
                _, _, _, name, payload = events[i]
                _apply_entry(self.bags[name.lower()], self.wm, name.lower(), ptime, payload)
                self._after_event(ptime, payload)
                i += 1
            self._fire_timers(ptime, inclusive=True)
            self.checkpoints.append((ptime, self.materialized_relation()))
        self._fire_timers(to, inclusive=True)
        return self.emitted

    def _after_event(self, ptime: Timestamp, payload) -> None:
        if self.emit.delay is None:
            view = self._view()
            self._emit_diff(self.prev_view, view, ptime)
            self.prev_view = view
            return
        groups = self._grouped_result()
        if self.emit.after_watermark and isinstance(payload, WatermarkAdvance):
            for key in self._known_keys(groups):
                state = self.timers.get(key)
                if state is not None and state.final:
                    continue
                if self._key_complete(key):
                    state = self.timers.setdefault(key, DelayTimerState())
                    self._emit_diff(state.last_materialized, groups.get(key, Counter()), ptime)
                    state.last_materialized = groups.get(key, Counter()).copy()
                    state.pending_fire = None
                    state.final = True
        for key in self._known_keys(groups):
            state = self.timers.setdefault(key, DelayTimerState())
            if state.final or state.pending_fire is not None:
                continue
            if groups.get(key, Counter()) != state.last_materialized:
                state.pending_fire = ptime + self.emit.delay

    def _fire_timers(self, bound: Timestamp, inclusive: bool) -> None:
        if self.emit.delay is None:
            return
        while True:
            due = [
                (state.pending_fire, row_key(key), key)
                for key, state in self.timers.items()
                if state.pending_fire is not None
                and (state.pending_fire <= bound if inclusive else state.pending_fire < bound)
            ]
            if not due:
                return
            due.sort(key=lambda d: (sort_key(d[0]), d[1]))
            fire, _, key = due[0]
            state = self.timers[key]
            groups = self._grouped_result()
            current = groups.get(key, Counter())
            self._emit_diff(state.last_materialized, current, fire)
            state.last_materialized = current.copy()
            state.pending_fire = None

    # -- views --------------------------------------------------------------

    def _current_rows(self) -> list[_TRow]:
        return _eval(self.plan, self.bags)

    def _view(self) -> Counter:
        rows = self._current_rows()
        if self.emit.after_watermark:
            def lookup(source_col):
                return self.wm.get(source_col, BOTTOM)

            rows = [t for t in rows if _row_complete(self.columns, t.row, lookup)]
        view: Counter = Counter()
        for trow in rows:
            view[trow.row] += 1
        return view

    def _grouped_result(self) -> dict[tuple, Counter]:
        groups: dict[tuple, Counter] = {}
        for trow in self._current_rows():
            key = self._wkey(trow.row)
            groups.setdefault(key, Counter())[trow.row] += 1
        return groups

    def _wkey(self, row: Row) -> tuple:
        return tuple(row[i] for i in self.key_indices)

    def _known_keys(self, groups: dict[tuple, Counter]) -> list[tuple]:
        keys = set(groups) | {k for k, s in self.timers.items() if s.last_materialized or s.pending_fire}
        return sorted(keys, key=row_key)

    def _key_complete(self, key: tuple) -> bool:
        checked = False
        for pos, i in enumerate(self.key_indices):
            col = self.columns[i]
            if not col.is_event_time or col.wm_source is None:
                continue
            checked = True
            value = key[pos]
            wm = _effective(self.wm.get(col.wm_source, BOTTOM), col)
            if value is None or not is_complete(value, wm):
                return False
        return checked

    # -- emission -----------------------------------------------------------

    def _emit_diff(self, old: Counter, new: Counter, ptime: Timestamp) -> None:
        if old == new:
            return
        old_rel = Relation(self.schema)
        new_rel = Relation(self.schema)
        for row, n in old.items():
            old_rel.add(row, n)
        for row, n in new.items():
            new_rel.add(row, n)
        self.emitted.extend(
            relation_diff(old_rel, new_rel, ptime, self.ver_state, self.key_indices)
        )

    def materialized_relation(self) -> Relation:
        result = Relation(self.schema)
        if self.emit.delay is None:
            for row, n in self.prev_view.items():
                result.add(row, n)
        else:
            for state in self.timers.values():
                for row, n in state.last_materialized.items():
                    result.add(row, n)
        return result
