from __future__ import annotations

from tests.conftest import T
from tvrsql.format import format_changelog, format_table
from tvrsql.model import ChangelogRow, ColumnDef, Kind, Relation, Schema

BID_OUT = Schema(
    (
        ColumnDef("wstart", Kind.TIMESTAMP, is_event_time=True),
        ColumnDef("wend", Kind.TIMESTAMP, is_event_time=True),
        ColumnDef("bidtime", Kind.TIMESTAMP),
        ColumnDef("price", Kind.INTEGER, fmt="$"),
        ColumnDef("item", Kind.TEXT),
    )
)


def test_format_full_result_table():
    rel = Relation(
        BID_OUT,
        [
            (T("8:10"), T("8:20"), T("8:17"), 6, "F"),
            (T("8:00"), T("8:10"), T("8:09"), 5, "D"),
        ],
    )
    assert format_table(rel) == (
        "------------------------------------------\n"
        "| wstart | wend | bidtime | price | item |\n"
        "------------------------------------------\n"
        "| 8:00   | 8:10 | 8:09    | $5    | D    |\n"
        "| 8:10   | 8:20 | 8:17    | $6    | F    |\n"
        "------------------------------------------\n"
    )


def test_format_empty_table_is_borders_and_header():
    assert format_table(Relation(BID_OUT)) == (
        "------------------------------------------\n"
        "| wstart | wend | bidtime | price | item |\n"
        "------------------------------------------\n"
        "------------------------------------------\n"
    )


def test_format_null_cell_renders_empty():
    schema = Schema((ColumnDef("x", Kind.INTEGER), ColumnDef("y", Kind.TEXT)))
    out = format_table(Relation(schema, [(None, "a")]))
    assert "|   | a |" in out


def test_format_rows_sorted_by_value():
    schema = Schema((ColumnDef("n", Kind.INTEGER),))
    out = format_table(Relation(schema, [(10,), (2,), (7,)]))
    body = [ln for ln in out.splitlines() if ln.startswith("|")][1:]
    assert body == ["| 2  |", "| 7  |", "| 10 |"]


def test_format_changelog_keeps_emission_order_and_metadata():
    rows = [
        ChangelogRow((T("8:00"), T("8:10"), T("8:07"), 2, "A"), False, T("8:08"), 0),
        ChangelogRow((T("8:00"), T("8:10"), T("8:07"), 2, "A"), True, T("8:13"), 1),
        ChangelogRow((T("8:00"), T("8:10"), T("8:05"), 4, "C"), False, T("8:13"), 2),
    ]
    out = format_changelog(rows, BID_OUT, open_ended=True)
    lines = out.splitlines()
    assert lines[1] == "| wstart | wend | bidtime | price | item | undo | ptime | ver |"
    assert lines[3] == "| 8:00   | 8:10 | 8:07    | $2    | A    |      | 8:08  | 0   |"
    assert lines[4] == "| 8:00   | 8:10 | 8:07    | $2    | A    | undo | 8:13  | 1   |"
    assert lines[5] == "| 8:00   | 8:10 | 8:05    | $4    | C    |      | 8:13  | 2   |"
    assert lines[-1] == "..."


def test_format_empty_changelog():
    out = format_changelog([], BID_OUT)
    lines = out.splitlines()
    assert len(lines) == 4
    assert lines[1].endswith("| undo | ptime | ver |")


def test_format_distinct_relations_render_differently():
    schema = Schema((ColumnDef("n", Kind.INTEGER),))
    a = Relation(schema, [(1,)])
    b = Relation(schema, [(1,), (1,)])
    assert format_table(a) != format_table(b)
