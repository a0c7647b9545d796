"""Deterministic ASCII rendering of relations and changelogs.

Snapshot tables sort rows lexicographically by value; changelogs keep emission
order and append the undo/ptime/ver metadata columns. Cell text is the same
convention the log format uses (H:MM timestamps, `$`-hinted integers).
"""

from __future__ import annotations

from .model import ChangelogRow, ColumnDef, Kind, Relation, Schema, format_value


def _render(headers: list[str], rows: list[list[str]], trailer: str | None = None) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    border = "-" * (sum(w + 3 for w in widths) + 1)
    header = "| " + " | ".join(h.ljust(w) for h, w in zip(headers, widths)) + " |"
    lines = [border, header, border]
    for row in rows:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
    lines.append(border)
    if trailer:
        lines.append(trailer)
    return "\n".join(lines) + "\n"


def format_table(relation: Relation) -> str:
    """Borders, header, and data rows in lexicographic value order."""
    cols = relation.schema.columns
    rows = [
        [format_value(v, c) for v, c in zip(row, cols)] for row in relation.sorted_rows()
    ]
    return _render([c.name for c in cols], rows)


_META_COLUMNS = (
    ColumnDef("undo", Kind.TEXT),
    ColumnDef("ptime", Kind.TIMESTAMP),
    ColumnDef("ver", Kind.INTEGER),
)


def format_changelog(rows: list[ChangelogRow], schema: Schema, open_ended: bool = False) -> str:
    """Changelog rows in emission order with trailing undo/ptime/ver columns.

    `open_ended` appends a `...` line: the stream continues past this view.
    """
    cols = schema.columns
    rendered = []
    for cr in rows:
        cells = [format_value(v, c) for v, c in zip(cr.row, cols)]
        cells += ["undo" if cr.undo else "", str(cr.ptime), str(cr.ver)]
        rendered.append(cells)
    headers = [c.name for c in cols] + [m.name for m in _META_COLUMNS]
    return _render(headers, rendered, trailer="..." if open_ended else None)
