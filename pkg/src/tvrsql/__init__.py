"""tvrsql: a desk-scale streaming SQL engine.

Every query input and output is a time-varying relation; event-time columns
carry watermarks; Tumble/Hop table-valued functions window event time; EMIT
clauses control how and when results materialize (changelog streams,
watermark-gated completeness, periodic delay).
"""

from .errors import LogError, RetractionUnderflow, SqlError, TvrError
from .eventlog import (
    Catalog,
    SourceLog,
    parse_log,
    parse_schema_ddl,
    serialize_changelog,
    snapshot,
    watermark_state,
)
from .executor import EvalContext, eval_relational, eval_stream, eval_table
from .format import format_changelog, format_table
from .model import (
    BOTTOM,
    ChangelogRow,
    ColumnDef,
    Kind,
    Relation,
    Schema,
    WatermarkState,
    changelog_fold,
    is_complete,
    relation_diff,
    watermark_at,
)
from .parser import EmitSpec, parse_query, parse_sql, to_sql
from .repl import Session, run_command, run_script
from .times import Duration, Timestamp, minutes
from .validate import validate
from .windows import WindowSpec, apply_window_tvf, hop_assign, tumble_assign

__all__ = [
    "BOTTOM",
    "Catalog",
    "ChangelogRow",
    "ColumnDef",
    "Duration",
    "EmitSpec",
    "EvalContext",
    "Kind",
    "LogError",
    "Relation",
    "RetractionUnderflow",
    "Schema",
    "Session",
    "SourceLog",
    "SqlError",
    "Timestamp",
    "TvrError",
    "WatermarkState",
    "WindowSpec",
    "apply_window_tvf",
    "changelog_fold",
    "eval_relational",
    "eval_stream",
    "eval_table",
    "format_changelog",
    "format_table",
    "hop_assign",
    "is_complete",
    "minutes",
    "parse_log",
    "parse_query",
    "parse_schema_ddl",
    "parse_sql",
    "relation_diff",
    "run_command",
    "run_script",
    "serialize_changelog",
    "snapshot",
    "to_sql",
    "tumble_assign",
    "validate",
    "watermark_at",
    "watermark_state",
]
