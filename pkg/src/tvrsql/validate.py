"""Semantic analysis: resolves an AST against a catalog into a typed logical
plan with tracked event-time columns.

Event-time flags survive only verbatim forwarding (scan, identity projection,
join passthrough, grouping keys); any other expression drops the flag. Each
flagged plan column keeps a mapping to the source column whose watermark
governs it. Windowing TVF outputs (wstart/wend) inherit the time column's
watermark: every window bound assigned to a row is >= that row's timestamp, so
a bound can only complete after the timestamp itself does.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import parser as ast
from .errors import SqlError
from .eventlog import Catalog
from .model import Kind
from .times import Duration

# ---------------------------------------------------------------------------
# Typed expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColExpr:
    index: int
    kind: Kind


@dataclass(frozen=True)
class LitExpr:
    value: object
    kind: Kind


@dataclass(frozen=True)
class ArithExpr:
    op: str
    left: object
    right: object
    kind: Kind


@dataclass(frozen=True)
class CmpExpr:
    op: str
    left: object
    right: object
    kind: Kind = Kind.BOOLEAN


@dataclass(frozen=True)
class AndExpr:
    left: object
    right: object
    kind: Kind = Kind.BOOLEAN


# ---------------------------------------------------------------------------
# Plan schema and nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanColumn:
    name: str
    kind: Kind
    is_event_time: bool = False
    wm_source: tuple[str, str] | None = None
    # Effective watermark = source watermark minus wm_shift minutes. A window
    # start can trail the time column's watermark by up to the window width
    # (future rows still open windows that far back), so wstart carries
    # wm_shift = dur while wend and plain event-time columns carry 0.
    wm_shift: int = 0
    fmt: str | None = None
    pair_id: int | None = None  # shared by the wstart/wend of one TVF call


@dataclass(frozen=True)
class PlanSchema:
    columns: tuple[PlanColumn, ...]

    @property
    def arity(self) -> int:
        return len(self.columns)

    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def event_time_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.columns) if c.is_event_time)

    def to_schema(self):
        from .model import ColumnDef, Schema

        return Schema(
            tuple(
                ColumnDef(c.name, c.kind, is_event_time=c.is_event_time, fmt=c.fmt)
                for c in self.columns
            )
        )


@dataclass(frozen=True)
class Scan:
    source: str
    schema: PlanSchema


@dataclass(frozen=True)
class WindowTvf:
    input: object
    kind: str  # "tumble" | "hop"
    timecol_index: int
    dur: Duration
    hopsize: Duration | None
    offset: Duration
    schema: PlanSchema


@dataclass(frozen=True)
class Filter:
    input: object
    predicate: object
    schema: PlanSchema


@dataclass(frozen=True)
class Project:
    input: object
    exprs: tuple[object, ...]
    schema: PlanSchema


@dataclass(frozen=True)
class Join:
    left: object
    right: object
    predicate: object | None  # None means TRUE (cross join; WHERE filters above)
    schema: PlanSchema


@dataclass(frozen=True)
class KeyOut:
    index: int  # input column position


@dataclass(frozen=True)
class AggOut:
    func: str
    arg: object | None  # typed expression; None for COUNT(*)


@dataclass(frozen=True)
class Aggregate:
    input: object
    key_indices: tuple[int, ...]  # includes hidden window-pair keys
    items: tuple[KeyOut | AggOut, ...]
    schema: PlanSchema


def plan_sources(plan) -> set[str]:
    """Names of all sources scanned anywhere under `plan`."""
    if isinstance(plan, Scan):
        return {plan.source}
    if isinstance(plan, Join):
        return plan_sources(plan.left) | plan_sources(plan.right)
    return plan_sources(plan.input)


def window_key_indices(plan) -> tuple[int, ...]:
    """Output columns that identify the event-time window for changelog
    versioning: flagged grouping keys of aggregates, traced through verbatim
    forwarding. Empty when the plan has no aggregate-derived window columns.
    """
    return tuple(sorted(_window_marks(plan)))


def _window_marks(plan) -> set[int]:
    if isinstance(plan, Scan):
        return set()
    if isinstance(plan, Aggregate):
        keys = set(plan.key_indices)
        in_cols = plan.input.schema.columns
        return {
            i
            for i, item in enumerate(plan.items)
            if isinstance(item, KeyOut) and item.index in keys and in_cols[item.index].is_event_time
        }
    if isinstance(plan, Join):
        left = _window_marks(plan.left)
        right = {plan.left.schema.arity + i for i in _window_marks(plan.right)}
        return left | right
    if isinstance(plan, WindowTvf):
        return {i + 2 for i in _window_marks(plan.input)}
    if isinstance(plan, Filter):
        return _window_marks(plan.input)
    if isinstance(plan, Project):
        marks = _window_marks(plan.input)
        return {
            i
            for i, expr in enumerate(plan.exprs)
            if isinstance(expr, ColExpr) and expr.index in marks
        }
    raise TypeError(f"not a plan node: {plan!r}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class _Scope:
    """FROM bindings of one query level: (alias, plan node) with column offsets."""

    def __init__(self):
        self.bindings: list[tuple[str | None, PlanSchema, int]] = []
        self.arity = 0

    def bind(self, alias: str | None, schema: PlanSchema) -> None:
        low = alias.lower() if alias else None
        if low is not None and any(a == low for a, _, _ in self.bindings):
            raise SqlError(f"duplicate table alias {alias!r}")
        self.bindings.append((low, schema, self.arity))
        self.arity += schema.arity

    def resolve(self, ref: ast.ColumnRef) -> int:
        name = ref.name.lower()
        if ref.table is not None:
            table = ref.table.lower()
            for alias, schema, offset in self.bindings:
                if alias == table:
                    for i, col in enumerate(schema.columns):
                        if col.name.lower() == name:
                            return offset + i
                    raise SqlError(f"unknown column {ref.table}.{ref.name}")
            raise SqlError(f"unknown table {ref.table!r}")
        hits = []
        for _, schema, offset in self.bindings:
            for i, col in enumerate(schema.columns):
                if col.name.lower() == name:
                    hits.append(offset + i)
        if not hits:
            raise SqlError(f"unknown column {ref.name!r}")
        if len(hits) > 1:
            raise SqlError(f"ambiguous column {ref.name!r}")
        return hits[0]


class Validator:
    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self._next_pair = 0

    def validate(self, query: ast.Select):
        """Produce (plan, emit spec) or raise SqlError."""
        plan = self._build_query(query)
        emit = query.emit or ast.EmitSpec()
        if emit.after_watermark and not plan.schema.event_time_indices():
            raise SqlError("AFTER WATERMARK requires an event-time output column")
        return plan, emit

    # -- query level --------------------------------------------------------

    def _build_query(self, query: ast.Select):
        scope = _Scope()
        nodes = []
        for item in query.from_items:
            node, alias = self._build_from_item(item)
            scope.bind(alias, node.schema)
            nodes.append(node)
        plan = nodes[0]
        for node in nodes[1:]:
            plan = Join(plan, node, None, PlanSchema(plan.schema.columns + node.schema.columns))
        if query.where is not None:
            pred = self._typed_expr(query.where, scope, plan.schema)
            if pred.kind is not Kind.BOOLEAN:
                raise SqlError("WHERE predicate must be boolean")
            plan = Filter(plan, pred, plan.schema)
        if query.group_by:
            plan = self._build_aggregate(query, scope, plan)
        else:
            plan = self._build_project(query, scope, plan)
        _check_unique_names(plan.schema)
        return plan

    def _build_from_item(self, item):
        if isinstance(item, ast.TableRef):
            log = self._get_source(item.name)
            columns = tuple(
                PlanColumn(
                    c.name,
                    c.kind,
                    is_event_time=c.is_event_time,
                    wm_source=(log.name.lower(), c.name.lower()) if c.is_event_time else None,
                    fmt=c.fmt,
                )
                for c in log.schema.columns
            )
            return Scan(log.name.lower(), PlanSchema(columns)), item.alias or item.name
        if isinstance(item, ast.SubqueryRef):
            return self._build_query(item.query), item.alias
        if isinstance(item, ast.TvfCall):
            return self._build_tvf(item), item.alias
        raise SqlError(f"unsupported FROM item {item!r}")

    def _get_source(self, name: str):
        if not self.catalog.has(name):
            raise SqlError(f"unknown table {name!r}")
        return self.catalog.get(name)

    # -- windowing TVFs -----------------------------------------------------

    def _build_tvf(self, call: ast.TvfCall) -> WindowTvf:
        kind = call.name.lower()
        if kind not in ("tumble", "hop"):
            raise SqlError(f"unknown table function {call.name!r}")
        args: dict[str, object] = {}
        for arg_name, value in call.args:
            if arg_name in args:
                raise SqlError(f"duplicate argument {arg_name!r} in {call.name}")
            args[arg_name] = value
        required = {"tumble": ("data", "timecol", "dur"), "hop": ("data", "timecol", "dur", "hopsize")}[kind]
        allowed = set(required) | {"offset"}
        for arg_name in args:
            if arg_name not in allowed:
                raise SqlError(f"unknown argument {arg_name!r} to {call.name}")
        for arg_name in required:
            if arg_name not in args:
                raise SqlError(f"{call.name} requires argument {arg_name!r}")

        data = args["data"]
        if not isinstance(data, ast.TableArg):
            raise SqlError(f"{call.name} data argument must be TABLE(...)")
        input_node, _ = self._build_from_item(ast.TableRef(data.name))

        timecol = args["timecol"]
        if not isinstance(timecol, ast.DescriptorArg):
            raise SqlError(f"{call.name} timecol argument must be DESCRIPTOR(...)")
        in_schema = input_node.schema
        t_index = next(
            (i for i, c in enumerate(in_schema.columns) if c.name.lower() == timecol.column.lower()),
            None,
        )
        if t_index is None:
            raise SqlError(f"unknown column {timecol.column!r} in {data.name}")
        t_col = in_schema.columns[t_index]
        if not t_col.is_event_time:
            raise SqlError(f"{call.name} timecol {timecol.column!r} is not an event-time column")

        dur = self._interval_arg(call.name, "dur", args["dur"])
        if dur.minutes <= 0:
            raise SqlError(f"{call.name} dur must be positive")
        hopsize = None
        if kind == "hop":
            hopsize = self._interval_arg(call.name, "hopsize", args["hopsize"])
            if hopsize.minutes <= 0:
                raise SqlError(f"{call.name} hopsize must be positive")
        offset = Duration(0)
        if "offset" in args:
            offset = self._interval_arg(call.name, "offset", args["offset"])

        pair = self._next_pair
        self._next_pair += 1
        bounds = tuple(
            PlanColumn(
                name,
                Kind.TIMESTAMP,
                is_event_time=True,
                wm_source=t_col.wm_source,
                wm_shift=shift,
                pair_id=pair,
            )
            for name, shift in (("wstart", dur.minutes), ("wend", 0))
        )
        schema = PlanSchema(bounds + in_schema.columns)
        return WindowTvf(input_node, kind, t_index, dur, hopsize, offset, schema)

    @staticmethod
    def _interval_arg(func: str, name: str, value) -> Duration:
        if not isinstance(value, ast.IntervalLit):
            raise SqlError(f"{func} {name} argument must be an INTERVAL literal")
        return value.value

    # -- projection ---------------------------------------------------------

    def _build_project(self, query: ast.Select, scope: _Scope, plan) -> Project:
        in_cols = plan.schema.columns
        if query.items == ast.STAR:
            exprs = tuple(ColExpr(i, c.kind) for i, c in enumerate(in_cols))
            return Project(plan, exprs, plan.schema)
        exprs = []
        out_cols = []
        for item in query.items:
            if _has_aggregate(item.expr):
                raise SqlError("aggregate call requires GROUP BY")
            expr = self._typed_expr(item.expr, scope, plan.schema)
            name = item.alias or _default_name(item.expr)
            if isinstance(expr, ColExpr):
                out_cols.append(_forwarded(name, in_cols[expr.index]))
            else:
                out_cols.append(PlanColumn(name, expr.kind))
            exprs.append(expr)
        return Project(plan, tuple(exprs), PlanSchema(tuple(out_cols)))

    # -- aggregation --------------------------------------------------------

    def _build_aggregate(self, query: ast.Select, scope: _Scope, plan) -> Aggregate:
        in_cols = plan.schema.columns
        key_indices = []
        for ref in query.group_by:
            idx = scope.resolve(ref)
            if idx in key_indices:
                raise SqlError(f"duplicate grouping key {ref.name!r}")
            key_indices.append(idx)

        if any(not self.catalog.get(s).schema.bounded for s in plan_sources(plan)):
            if not any(in_cols[i].is_event_time for i in key_indices):
                raise SqlError("unbounded GROUP BY requires an event-time key")

        if query.items == ast.STAR:
            raise SqlError("SELECT * cannot be combined with GROUP BY")
        items: list[KeyOut | AggOut] = []
        out_cols = []
        for item in query.items:
            name = item.alias or _default_name(item.expr)
            if isinstance(item.expr, ast.AggCall):
                items.append(self._build_agg_call(item.expr, scope, plan.schema))
                out_cols.append(self._agg_out_column(name, items[-1], in_cols))
            elif isinstance(item.expr, ast.ColumnRef):
                idx = scope.resolve(item.expr)
                if idx not in key_indices:
                    idx = self._admit_pair_key(idx, key_indices, in_cols, item.expr)
                items.append(KeyOut(idx))
                out_cols.append(_forwarded(name, in_cols[idx]))
            else:
                raise SqlError("select item in a grouped query must be a grouping key or an aggregate")
        schema = PlanSchema(tuple(out_cols))
        return Aggregate(plan, tuple(key_indices), tuple(items), schema)

    @staticmethod
    def _admit_pair_key(idx: int, key_indices: list[int], in_cols, ref: ast.ColumnRef) -> int:
        # The wstart/wend partner of a grouped window bound is functionally
        # dependent on it, so it may be selected bare; grouping on it as a
        # hidden extra key cannot change the partitions.
        pair = in_cols[idx].pair_id
        if pair is not None and any(in_cols[k].pair_id == pair for k in key_indices):
            key_indices.append(idx)
            return idx
        raise SqlError(f"column {ref.name!r} must appear in GROUP BY or inside an aggregate")

    def _build_agg_call(self, call: ast.AggCall, scope: _Scope, schema: PlanSchema) -> AggOut:
        if call.arg == ast.STAR:
            if call.func != "COUNT":
                raise SqlError(f"{call.func}(*) is not valid")
            return AggOut("COUNT", None)
        arg = self._typed_expr(call.arg, scope, schema)
        if call.func == "SUM" and arg.kind not in (Kind.INTEGER, Kind.DURATION):
            raise SqlError(f"SUM requires a numeric argument, got {arg.kind}")
        return AggOut(call.func, arg)

    @staticmethod
    def _agg_out_column(name: str, agg: AggOut, in_cols) -> PlanColumn:
        if agg.arg is None:
            return PlanColumn(name, Kind.INTEGER)
        kind = Kind.INTEGER if agg.func == "COUNT" else agg.arg.kind
        fmt = None
        if isinstance(agg.arg, ColExpr) and agg.func in ("MAX", "MIN", "SUM"):
            fmt = in_cols[agg.arg.index].fmt
        return PlanColumn(name, kind, fmt=fmt)

    # -- expressions --------------------------------------------------------

    def _typed_expr(self, expr, scope: _Scope, schema: PlanSchema):
        if isinstance(expr, ast.ColumnRef):
            idx = scope.resolve(expr)
            return ColExpr(idx, schema.columns[idx].kind)
        if isinstance(expr, ast.IntegerLit):
            return LitExpr(expr.value, Kind.INTEGER)
        if isinstance(expr, ast.IntervalLit):
            return LitExpr(expr.value, Kind.DURATION)
        if isinstance(expr, ast.AggCall):
            raise SqlError("aggregate call not allowed here")
        if isinstance(expr, ast.BinaryOp):
            left = self._typed_expr(expr.left, scope, schema)
            right = self._typed_expr(expr.right, scope, schema)
            return _type_binary(expr.op, left, right)
        raise SqlError(f"unsupported expression {expr!r}")


_ARITH_RESULT = {
    ("+", Kind.TIMESTAMP, Kind.DURATION): Kind.TIMESTAMP,
    ("+", Kind.DURATION, Kind.TIMESTAMP): Kind.TIMESTAMP,
    ("+", Kind.DURATION, Kind.DURATION): Kind.DURATION,
    ("+", Kind.INTEGER, Kind.INTEGER): Kind.INTEGER,
    ("-", Kind.TIMESTAMP, Kind.DURATION): Kind.TIMESTAMP,
    ("-", Kind.DURATION, Kind.DURATION): Kind.DURATION,
    ("-", Kind.INTEGER, Kind.INTEGER): Kind.INTEGER,
}


def _type_binary(op: str, left, right):
    if op == "AND":
        if left.kind is not Kind.BOOLEAN or right.kind is not Kind.BOOLEAN:
            raise SqlError("AND requires boolean operands")
        return AndExpr(left, right)
    if op in ("=", "<", "<=", ">", ">="):
        if left.kind is not right.kind:
            raise SqlError(f"type mismatch: cannot compare {left.kind} and {right.kind}")
        return CmpExpr(op, left, right)
    kind = _ARITH_RESULT.get((op, left.kind, right.kind))
    if kind is None:
        raise SqlError(f"type mismatch: {left.kind} {op} {right.kind}")
    return ArithExpr(op, left, right, kind)


def _forwarded(name: str, src: PlanColumn) -> PlanColumn:
    """A verbatim-forwarded column: same metadata, possibly renamed."""
    return PlanColumn(
        name,
        src.kind,
        is_event_time=src.is_event_time,
        wm_source=src.wm_source,
        wm_shift=src.wm_shift,
        fmt=src.fmt,
        pair_id=src.pair_id,
    )


def _has_aggregate(expr) -> bool:
    if isinstance(expr, ast.AggCall):
        return True
    if isinstance(expr, ast.BinaryOp):
        return _has_aggregate(expr.left) or _has_aggregate(expr.right)
    return False


def _default_name(expr) -> str:
    if isinstance(expr, ast.ColumnRef):
        return expr.name
    if isinstance(expr, ast.AggCall):
        if isinstance(expr.arg, ast.ColumnRef):
            return expr.arg.name
        return expr.func.lower()
    raise SqlError("expression select item requires an alias")


def _check_unique_names(schema: PlanSchema) -> None:
    seen = set()
    for col in schema.columns:
        low = col.name.lower()
        if low in seen:
            raise SqlError(f"duplicate output column {col.name!r}; add an alias")
        seen.add(low)


def validate(query: ast.Select, catalog: Catalog):
    """Resolve and type a parsed query: returns (plan, emit spec)."""
    return Validator(catalog).validate(query)
