from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import T, load_bid_catalog
from tvrsql.errors import TvrError
from tvrsql.eventlog import snapshot
from tvrsql.model import BOTTOM, Relation
from tvrsql.times import Duration, Timestamp
from tvrsql.windows import WindowSpec, apply_window_tvf, hop_assign, tumble_assign

times = st.integers(min_value=-2000, max_value=2000).map(Timestamp.of)
durs = st.integers(min_value=1, max_value=90).map(Duration)
offsets = st.integers(min_value=0, max_value=90).map(Duration)


def test_tumble_demo_assignments():
    ten = Duration(10)
    assert tumble_assign(T("8:07"), ten) == (T("8:00"), T("8:10"))
    assert tumble_assign(T("8:10"), ten) == (T("8:10"), T("8:20"))
    assert tumble_assign(T("8:17"), ten) == (T("8:10"), T("8:20"))


def test_tumble_rejects_bottom():
    with pytest.raises(TvrError):
        tumble_assign(BOTTOM, Duration(10))
    with pytest.raises(TvrError):
        hop_assign(BOTTOM, Duration(10), Duration(5))


def test_hop_demo_assignments():
    assert hop_assign(T("8:07"), Duration(10), Duration(5)) == [
        (T("8:00"), T("8:10")),
        (T("8:05"), T("8:15")),
    ]
    assert hop_assign(T("8:17"), Duration(10), Duration(5)) == [
        (T("8:10"), T("8:20")),
        (T("8:15"), T("8:25")),
    ]


def test_hop_with_gaps_can_assign_nothing():
    # Oracle: direct membership scan over candidate starts.
    def oracle(t, dur, hop, offset=0):
        out = []
        for k in range(-300, 300):
            ws = offset + k * hop
            if ws <= t.minutes < ws + dur:
                out.append((Timestamp.of(ws), Timestamp.of(ws + dur)))
        return out

    t = T("0:07")
    assert hop_assign(t, Duration(5), Duration(10)) == []
    assert hop_assign(t, Duration(5), Duration(10)) == oracle(t, 5, 10)
    for minutes, dur, hop in [(3, 4, 9), (11, 2, 5), (59, 7, 10), (-13, 4, 9)]:
        got = hop_assign(Timestamp.of(minutes), Duration(dur), Duration(hop))
        assert got == oracle(Timestamp.of(minutes), dur, hop)


@settings(max_examples=300)
@given(times, durs, offsets)
def test_tumble_partition_law(t, dur, offset):
    wstart, wend = tumble_assign(t, dur, offset)
    assert wstart <= t < wend
    assert wend.minutes - wstart.minutes == dur.minutes
    assert (wstart.minutes - offset.minutes) % dur.minutes == 0
    # Every instant of the window maps back to the same window: disjoint cover.
    for probe in (wstart, wend - Duration(1)):
        assert tumble_assign(probe, dur, offset) == (wstart, wend)
    assert tumble_assign(wend, dur, offset) == (wend, wend + dur)


@settings(max_examples=300)
@given(times, durs, offsets)
def test_hop_generalizes_tumble(t, dur, offset):
    assert hop_assign(t, dur, dur, offset) == [tumble_assign(t, dur, offset)]


@settings(max_examples=300)
@given(times, st.integers(1, 12), st.integers(1, 12), offsets)
def test_hop_count_law_when_hopsize_divides_dur(t, hop, factor, offset):
    hopsize = Duration(hop)
    dur = Duration(hop * factor)
    windows = hop_assign(t, dur, hopsize, offset)
    assert len(windows) == factor
    for wstart, wend in windows:
        assert wstart <= t < wend


@settings(max_examples=300)
@given(times, durs, durs, offsets)
def test_hop_windows_sound_and_ordered(t, dur, hopsize, offset):
    windows = hop_assign(t, dur, hopsize, offset)
    assert windows == sorted(windows)
    for wstart, wend in windows:
        assert wstart <= t < wend
        assert wend.minutes - wstart.minutes == dur.minutes
        assert (wstart.minutes - offset.minutes) % hopsize.minutes == 0


def test_grouping_by_wstart_equals_grouping_by_wend():
    catalog = load_bid_catalog()
    rel = snapshot(catalog.get("Bid"), T("8:21"))
    out = apply_window_tvf(rel, WindowSpec("tumble", "bidtime", Duration(10)))
    by_start: dict = {}
    by_end: dict = {}
    for row in out.rows():
        by_start.setdefault(row[0], set()).add(row[2:])
        by_end.setdefault(row[1], set()).add(row[2:])
    assert {frozenset(g) for g in by_start.values()} == {frozenset(g) for g in by_end.values()}


def test_apply_window_tvf_demo_tables():
    catalog = load_bid_catalog()
    rel = snapshot(catalog.get("Bid"), T("8:21"))
    tumbled = apply_window_tvf(rel, WindowSpec("tumble", "bidtime", Duration(10)))
    assert len(tumbled) == 6
    assert tumbled.schema.names() == ["wstart", "wend", "bidtime", "price", "item"]
    assert tumbled.schema.columns[0].is_event_time and tumbled.schema.columns[1].is_event_time
    assert (T("8:00"), T("8:10"), T("8:07"), 2, "A") in tumbled.bag

    hopped = apply_window_tvf(rel, WindowSpec("hop", "bidtime", Duration(10), Duration(5)))
    assert len(hopped) == 12
    assert (T("8:15"), T("8:25"), T("8:17"), 6, "F") in hopped.bag


def test_apply_window_tvf_empty_input():
    catalog = load_bid_catalog()
    empty = Relation(catalog.get("Bid").schema)
    out = apply_window_tvf(empty, WindowSpec("tumble", "bidtime", Duration(10)))
    assert len(out) == 0
    assert out.schema.names() == ["wstart", "wend", "bidtime", "price", "item"]


def test_apply_window_tvf_requires_event_time_column():
    catalog = load_bid_catalog()
    rel = snapshot(catalog.get("Bid"), T("8:21"))
    with pytest.raises(TvrError):
        apply_window_tvf(rel, WindowSpec("tumble", "price", Duration(10)))


def test_window_spec_invariants():
    with pytest.raises(TvrError):
        WindowSpec("tumble", "t", Duration(0))
    with pytest.raises(TvrError):
        WindowSpec("hop", "t", Duration(10))
    with pytest.raises(TvrError):
        WindowSpec("session", "t", Duration(10))
