import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quoteleg.lob import (
    Book,
    BookSnapshot,
    InsufficientDepth,
    NegativeDepth,
    replay,
    snapshot_record,
    vwap_reference,
)
from quoteleg.money import from_inr
from quoteleg.tickstore import Aggressor, EventKind, Side, TickEvent

SYM = "X"


def ev(ts, kind, side, price, qty, oid1=None, oid2=None, agg=None):
    return TickEvent(ts, SYM, kind, side, price, qty, oid1, oid2, agg)


def test_new_into_empty_book():
    book = Book(SYM)
    book.apply_event(ev(1, EventKind.NEW, Side.BID, 1745500, 50, 1))
    snap = book.snapshot(1)
    assert snap.bids == ((1745500, 50),)
    assert snap.asks == ()
    assert not snap.ready


def _ladder_events():
    rows = []
    ts = 1
    oid = 1
    for price, qty in [(17455, 50), (17450, 50), (17401.10, 100),
                       (17376, 800), (17355, 100)]:
        rows.append(ev(ts, EventKind.NEW, Side.BID, from_inr(price), qty, oid))
        ts += 1
        oid += 1
    for price, qty in [(17458.55, 50), (17459.65, 50), (17459.95, 100),
                       (17460, 550), (17475, 250)]:
        rows.append(ev(ts, EventKind.NEW, Side.ASK, from_inr(price), qty, oid))
        ts += 1
        oid += 1
    return rows


def test_replay_five_level_ladder(near_book):
    book = replay(_ladder_events(), SYM)
    snap = book.snapshot(99)
    assert snap.bids == near_book.bids
    assert snap.asks == near_book.asks
    assert snap.ready and not snap.crossed


def test_trade_consumes_touch_two_level_oracle():
    book = Book(SYM)
    book.apply_event(ev(1, EventKind.NEW, Side.BID, 1745500, 50, 1))
    book.apply_event(ev(2, EventKind.NEW, Side.BID, 1745000, 50, 2))
    book.apply_event(ev(3, EventKind.TRADE, Side.UNKNOWN, 1745500, 50, 9, 1,
                        Aggressor.SELL))
    assert book.best_bid() == 1745000


def test_modify_is_remove_then_insert():
    book = Book(SYM)
    book.apply_event(ev(1, EventKind.NEW, Side.ASK, 100, 10, 1))
    book.apply_event(ev(2, EventKind.MODIFY, Side.ASK, 105, 10, 1))
    snap = book.snapshot(2)
    assert snap.asks == ((105, 10),)


def test_negative_depth_lenient_clamps_and_counts():
    book = Book(SYM)
    book.apply_event(ev(1, EventKind.NEW, Side.BID, 100, 5, 1))
    book.apply_event(ev(2, EventKind.CANCEL, Side.BID, 100, 50, 1))
    assert book.snapshot(2).bids == ()
    assert book.diagnostics["negative_depth_clamps"] == 1


def test_negative_depth_strict_raises():
    book = Book(SYM, strict=True)
    book.apply_event(ev(1, EventKind.NEW, Side.BID, 100, 5, 1))
    with pytest.raises(NegativeDepth):
        book.apply_event(ev(2, EventKind.CANCEL, Side.BID, 100, 50, 1))


def test_wrong_symbol_rejected():
    book = Book(SYM)
    with pytest.raises(ValueError):
        book.apply_event(TickEvent(1, "OTHER", EventKind.NEW, Side.BID, 5, 1, 1))


def test_crossed_snapshot_flagged_not_raised():
    book = Book(SYM)
    book.apply_event(ev(1, EventKind.NEW, Side.BID, 110, 10, 1))
    book.apply_event(ev(2, EventKind.NEW, Side.ASK, 100, 10, 2))
    snap = book.snapshot(2)
    assert snap.crossed
    assert book.diagnostics["crossed_snapshots"] == 1


def test_snapshot_truncated_to_depth():
    book = Book(SYM, depth=2)
    for k in range(5):
        book.apply_event(ev(k + 1, EventKind.NEW, Side.BID, 100 - 5 * k, 10, k))
    assert len(book.snapshot(9).bids) == 2


def test_snapshot_invariants_reject_bad_ladders():
    with pytest.raises(ValueError):
        BookSnapshot(1, bids=((100, 10), (100, 5)), asks=())
    with pytest.raises(ValueError):
        BookSnapshot(1, bids=(), asks=((100, 0),))


def test_replay_determinism():
    events = _ladder_events()
    a = replay(events, SYM).snapshot(50)
    b = replay(events, SYM).snapshot(50)
    assert a == b


def test_vwap_single_level_is_price(near_book):
    assert vwap_reference(near_book, Side.BID, 1) == 17455.0


def test_vwap_two_levels(near_book, far_book):
    assert vwap_reference(near_book, Side.BID, 2) == pytest.approx(17452.5, rel=1e-12)
    assert vwap_reference(far_book, Side.ASK, 2) == pytest.approx(17516.5125, rel=1e-12)


def test_vwap_insufficient_depth(near_book):
    with pytest.raises(InsufficientDepth):
        vwap_reference(near_book, Side.BID, 6)
    with pytest.raises(InsufficientDepth):
        vwap_reference(near_book, Side.BID, 0)


@given(st.lists(st.tuples(st.integers(min_value=1, max_value=400),
                          st.integers(min_value=1, max_value=500)),
                min_size=1, max_size=8, unique_by=lambda t: t[0]))
@settings(max_examples=200, deadline=None)
def test_vwap_bounds_and_depth_monotonicity(levels):
    prices = sorted({5 * p for p, _ in levels}, reverse=True)
    bids = tuple((p, q) for p, (_, q) in zip(prices, levels))
    snap = BookSnapshot(1, bids=bids, asks=())
    values = [vwap_reference(snap, Side.BID, k) for k in range(1, len(bids) + 1)]
    lo = min(p for p, _ in bids) / 100
    hi = max(p for p, _ in bids) / 100
    for v in values:
        assert lo - 1e-9 <= v <= hi + 1e-9
    # adding a worse bid level never raises the bid-side reference
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-12


def test_snapshot_record_stable_columns(near_book):
    rec = snapshot_record(near_book, 5)
    keys = list(rec)
    assert keys[0] == "ts_nanos"
    assert "bid_px_1" in keys and "ask_qty_5" in keys
    short = snapshot_record(BookSnapshot(1, (), ()), 2)
    assert short["bid_px_1"] is None
