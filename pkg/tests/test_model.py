from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import ROW_A, ROW_B, ROW_C, ROW_D, ROW_F, T
from tvrsql.errors import InternalError, RetractionUnderflow, TvrError
from tvrsql.model import (
    ChangelogRow,
    ColumnDef,
    Kind,
    Relation,
    Schema,
    WatermarkState,
    changelog_fold,
    is_complete,
    relation_diff,
    sort_key,
    watermark_at,
)
from tvrsql.times import BOTTOM, Timestamp

# Output schema of the running example: window bounds are the event-time
# (and version-key) columns, bidtime is a plain timestamp here.
Q7_SCHEMA = Schema(
    (
        ColumnDef("wstart", Kind.TIMESTAMP, is_event_time=True),
        ColumnDef("wend", Kind.TIMESTAMP, is_event_time=True),
        ColumnDef("bidtime", Kind.TIMESTAMP),
        ColumnDef("price", Kind.INTEGER, fmt="$"),
        ColumnDef("item", Kind.TEXT),
    )
)

# The stream changelog of the running example over the demo log (undo, ptime, ver).
LISTING_STREAM = [
    ChangelogRow(ROW_A, False, T("8:08"), 0),
    ChangelogRow(ROW_B, False, T("8:12"), 0),
    ChangelogRow(ROW_A, True, T("8:13"), 1),
    ChangelogRow(ROW_C, False, T("8:13"), 2),
    ChangelogRow(ROW_C, True, T("8:15"), 3),
    ChangelogRow(ROW_D, False, T("8:15"), 4),
    ChangelogRow(ROW_B, True, T("8:18"), 1),
    ChangelogRow(ROW_F, False, T("8:18"), 2),
]


# ---------------------------------------------------------------------------
# Schema / relation basics
# ---------------------------------------------------------------------------


def test_schema_rejects_duplicate_names_case_insensitive():
    with pytest.raises(TvrError):
        Schema((ColumnDef("x", Kind.INTEGER), ColumnDef("X", Kind.TEXT)))


def test_event_time_requires_timestamp():
    with pytest.raises(TvrError):
        ColumnDef("p", Kind.INTEGER, is_event_time=True)


def test_relation_is_a_bag():
    schema = Schema((ColumnDef("x", Kind.INTEGER),))
    rel = Relation(schema, [(1,), (1,), (2,)])
    assert len(rel) == 3
    assert rel.bag[(1,)] == 2
    rel.remove((1,))
    assert rel.bag[(1,)] == 1
    with pytest.raises(RetractionUnderflow):
        rel.remove((9,))


def test_sort_key_totally_orders_mixed_values():
    values = ["b", None, 3, T("8:00"), BOTTOM, True, 1, "a"]
    ordered = sorted(values, key=sort_key)
    assert ordered == [None, True, 1, 3, BOTTOM, T("8:00"), "a", "b"]


# ---------------------------------------------------------------------------
# Watermarks
# ---------------------------------------------------------------------------


def demo_watermarks() -> WatermarkState:
    state = WatermarkState()
    for p, v in (("8:07", "8:05"), ("8:14", "8:08"), ("8:16", "8:12"), ("8:21", "8:20")):
        state.advance("Bid", "bidtime", T(p), T(v))
    return state


def test_watermark_at_demo_values():
    state = demo_watermarks()
    assert watermark_at(state, "Bid.bidtime", T("8:14")) == T("8:08")
    assert watermark_at(state, "Bid.bidtime", T("8:00")) == BOTTOM
    assert watermark_at(state, "Bid.bidtime", T("8:21")) == T("8:20")
    assert watermark_at(state, "bid.BIDTIME", T("8:15")) == T("8:08")


def test_watermark_at_unknown_column_is_an_error():
    with pytest.raises(TvrError):
        watermark_at(demo_watermarks(), "Bid.nope", T("8:00"))
    with pytest.raises(TvrError):
        watermark_at(demo_watermarks(), "justbid", T("8:00"))


def test_watermark_entries_must_increase():
    state = demo_watermarks()
    with pytest.raises(TvrError):
        state.advance("Bid", "bidtime", T("8:22"), T("8:20"))
    with pytest.raises(TvrError):
        state.advance("Bid", "bidtime", T("8:21"), T("8:25"))


@given(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 500)), max_size=20), st.data())
def test_watermark_monotone_in_ptime(pairs, data):
    state = WatermarkState()
    state.register("s", "c")
    p_acc, v_acc = -1, -1
    for dp, dv in pairs:
        p_acc += dp + 1
        v_acc += dv + 1
        state.advance("s", "c", Timestamp.of(p_acc), Timestamp.of(v_acc))
    p1 = data.draw(st.integers(-10, 600))
    p2 = data.draw(st.integers(-10, 600))
    if p2 < p1:
        p1, p2 = p2, p1
    assert watermark_at(state, "s.c", Timestamp.of(p1)) <= watermark_at(state, "s.c", Timestamp.of(p2))


def test_is_complete_matches_demo():
    assert is_complete(T("8:10"), T("8:12"))
    assert is_complete(T("8:20"), T("8:20"))
    assert not is_complete(T("8:20"), BOTTOM)
    with pytest.raises(TvrError):
        is_complete(BOTTOM, T("8:20"))


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
def test_is_complete_monotone_antitone(key, wm1, wm2):
    lo, hi = sorted((wm1, wm2))
    if is_complete(Timestamp.of(key), Timestamp.of(lo)):
        assert is_complete(Timestamp.of(key), Timestamp.of(hi))
    if is_complete(Timestamp.of(hi), Timestamp.of(key)):
        assert is_complete(Timestamp.of(lo), Timestamp.of(key))


# ---------------------------------------------------------------------------
# relation_diff
# ---------------------------------------------------------------------------


def test_diff_revises_window_row_sharing_one_counter():
    old = Relation(Q7_SCHEMA, [ROW_A])
    new = Relation(Q7_SCHEMA, [ROW_C])
    ver_state = {(T("8:00"), T("8:10")): 1}
    out = relation_diff(old, new, T("8:13"), ver_state)
    assert out == [
        ChangelogRow(ROW_A, True, T("8:13"), 1),
        ChangelogRow(ROW_C, False, T("8:13"), 2),
    ]


def test_diff_of_identical_relations_is_empty():
    rel = Relation(Q7_SCHEMA, [ROW_A, ROW_B, ROW_B])
    assert relation_diff(rel, rel, T("9:00"), {}) == []


def test_diff_schema_mismatch_is_internal_error():
    other = Schema((ColumnDef("x", Kind.INTEGER),))
    with pytest.raises(InternalError):
        relation_diff(Relation(Q7_SCHEMA), Relation(other), T("9:00"), {})


def _small_bags(rng: random.Random, n: int):
    rows = [(rng.randint(0, 2), rng.choice("xy")) for _ in range(n)]
    return rows


def test_diff_matches_multiset_subtraction_oracle():
    # Independent oracle: count occurrences on both sides and subtract.
    schema = Schema((ColumnDef("n", Kind.INTEGER), ColumnDef("s", Kind.TEXT)))
    rng = random.Random(7)
    for _ in range(300):
        old_rows = _small_bags(rng, rng.randint(0, 5))
        new_rows = _small_bags(rng, rng.randint(0, 5))
        expected_removed = Counter(old_rows) - Counter(new_rows)
        expected_added = Counter(new_rows) - Counter(old_rows)
        out = relation_diff(
            Relation(schema, old_rows), Relation(schema, new_rows), Timestamp.of(1), {}
        )
        got_removed = Counter(cr.row for cr in out if cr.undo)
        got_added = Counter(cr.row for cr in out if not cr.undo)
        assert got_removed == expected_removed
        assert got_added == expected_added
        # Ordering: all undos first, then inserts, each sorted by row value.
        undo_flags = [cr.undo for cr in out]
        assert undo_flags == sorted(undo_flags, reverse=True)


def test_ver_density_per_window_key():
    rng = random.Random(11)
    rows = [(Timestamp.of(rng.randint(0, 2)), rng.randint(0, 3)) for _ in range(40)]
    schema = Schema(
        (ColumnDef("w", Kind.TIMESTAMP, is_event_time=True), ColumnDef("v", Kind.INTEGER))
    )
    ver_state: dict = {}
    emitted: dict[tuple, list[int]] = {}
    prev = Relation(schema)
    for i in range(1, 9):
        nxt = Relation(schema, rng.sample(rows, rng.randint(0, 6)))
        for cr in relation_diff(prev, nxt, Timestamp.of(i), ver_state):
            emitted.setdefault((cr.row[0],), []).append(cr.ver)
        prev = nxt
    for vers in emitted.values():
        assert vers == list(range(len(vers)))


# ---------------------------------------------------------------------------
# changelog_fold
# ---------------------------------------------------------------------------


def test_fold_full_stream_gives_final_table():
    rel = changelog_fold(LISTING_STREAM, T("8:21"), Q7_SCHEMA)
    assert rel == Relation(Q7_SCHEMA, [ROW_D, ROW_F])


def test_fold_partial_stream_gives_earlier_table():
    rel = changelog_fold(LISTING_STREAM, T("8:13"), Q7_SCHEMA)
    assert rel == Relation(Q7_SCHEMA, [ROW_C, ROW_B])


def test_fold_empty_changelog():
    assert len(changelog_fold([], T("9:99"), Q7_SCHEMA)) == 0


def test_fold_rejects_underflow():
    rows = [ChangelogRow(ROW_A, True, T("8:00"), 0)]
    with pytest.raises(RetractionUnderflow):
        changelog_fold(rows, T("9:00"), Q7_SCHEMA)


def test_fold_rejects_decreasing_ptime():
    rows = [
        ChangelogRow(ROW_A, False, T("8:10"), 0),
        ChangelogRow(ROW_B, False, T("8:00"), 0),
    ]
    with pytest.raises(TvrError):
        changelog_fold(rows, T("9:00"), Q7_SCHEMA)


@settings(max_examples=200)
@given(
    st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1)), max_size=6),
    st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1)), max_size=6),
)
def test_diff_then_fold_reproduces_target(old_rows, new_rows):
    schema = Schema((ColumnDef("a", Kind.INTEGER), ColumnDef("b", Kind.INTEGER)))
    old = Relation(schema, old_rows)
    new = Relation(schema, new_rows)
    ver_state: dict = {}
    log = relation_diff(Relation(schema), old, Timestamp.of(1), ver_state)
    log += relation_diff(old, new, Timestamp.of(2), ver_state)
    assert changelog_fold(log, Timestamp.of(1), schema) == old
    assert changelog_fold(log, Timestamp.of(2), schema) == new
