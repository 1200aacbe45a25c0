import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quoteleg.clf import (
    ClfTick,
    ClfVoteConfig,
    DegenerateDepth,
    InsufficientLevels,
    NonPositiveNumerator,
    NoValidTicks,
    clf_current_bid,
    clf_decision,
    clf_next_ask,
    clf_stream,
    ema_at,
)
from quoteleg.lob import BookSnapshot

# scalar oracles: log price gap over log cumulative depth, computed
# directly from the ladder numbers
NEAR_BID_1 = math.log(17455 / 17450) / math.log(50)
NEAR_BID_2 = math.log(17455 / 17401.10) / math.log(100)
FAR_ASK_1 = math.log(17516.55 / 17516.50) / math.log(150)
FAR_ASK_4 = math.log(17523.40 / 17516.50) / math.log(300)


def test_frozen_oracle_constants():
    assert NEAR_BID_1 == pytest.approx(7.323369728797498e-05, rel=1e-12)
    assert NEAR_BID_2 == pytest.approx(0.0006715751685616078, rel=1e-12)
    assert FAR_ASK_1 == pytest.approx(5.69677750559461e-07, rel=1e-12)
    assert FAR_ASK_4 == pytest.approx(6.904834594277918e-05, rel=1e-12)


def test_current_bid_depths(near_book):
    assert clf_current_bid(near_book, 1).value == pytest.approx(NEAR_BID_1, rel=1e-9)
    assert clf_current_bid(near_book, 2).value == pytest.approx(NEAR_BID_2, rel=1e-9)


def test_next_ask_depths(far_book):
    assert clf_next_ask(far_book, 1).value == pytest.approx(FAR_ASK_1, rel=1e-9)
    assert clf_next_ask(far_book, 4).value == pytest.approx(FAR_ASK_4, rel=1e-9)


def test_insufficient_levels(far_book):
    with pytest.raises(InsufficientLevels):
        clf_next_ask(far_book, 5)


def test_degenerate_depth():
    snap = BookSnapshot(1, bids=((1745500, 1), (1745000, 50)), asks=())
    with pytest.raises(DegenerateDepth):
        clf_current_bid(snap, 1)


def test_non_positive_numerator_on_equal_prices():
    # bypass snapshot validation: feed the raw ladder shape the metric
    # guards against
    snap = BookSnapshot(1, bids=((1745500, 50), (1745000, 50)), asks=())
    object.__setattr__(snap, "bids", ((1745500, 50), (1745500, 50)))
    with pytest.raises(NonPositiveNumerator):
        clf_current_bid(snap, 1)


def _random_bid_ladder(rng, depth):
    touch = int(rng.integers(1000, 400000)) * 5
    gaps = rng.integers(1, 50, size=depth)
    prices = [touch]
    for g in gaps:
        prices.append(prices[-1] - int(g) * 5)
    if prices[-1] <= 0:
        prices = [p + abs(prices[-1]) + 5 for p in prices]
    qtys = rng.integers(2, 1000, size=depth + 1)
    return tuple((p, int(q)) for p, q in zip(prices, qtys))


def test_monotonicity_randomized_batch():
    """Widening the price gap raises the factor; deepening the stack
    lowers it.  Vectorized sweep, ten thousand cases."""
    rng = np.random.default_rng(7)
    n = 10_000
    p1 = rng.integers(1_000, 400_000, size=n).astype(float) * 5
    gap = rng.integers(1, 200, size=n).astype(float) * 5
    widen = rng.integers(1, 50, size=n).astype(float) * 5
    qty = rng.integers(2, 2_000, size=n).astype(float)
    add = rng.integers(1, 500, size=n).astype(float)

    base = np.log(p1 / (p1 - gap)) / np.log(qty)
    wider = np.log(p1 / (p1 - gap - widen)) / np.log(qty)
    deeper = np.log(p1 / (p1 - gap)) / np.log(qty + add)
    assert (wider > base).all()
    assert (deeper < base).all()


@given(st.data())
@settings(max_examples=300, deadline=None)
def test_monotonicity_hypothesis(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    depth = data.draw(st.integers(1, 4))
    bids = _random_bid_ladder(rng, depth)
    snap = BookSnapshot(1, bids=bids, asks=())
    base = clf_current_bid(snap, depth).value
    # widen the far price down one tick
    wide = list(bids)
    wide[depth] = (wide[depth][0] - 5, wide[depth][1])
    wider = clf_current_bid(BookSnapshot(1, bids=tuple(wide), asks=()), depth).value
    assert wider > base
    # add quantity at the touch
    deep = list(bids)
    deep[0] = (deep[0][0], deep[0][1] + 10)
    deeper = clf_current_bid(BookSnapshot(1, bids=tuple(deep), asks=()), depth).value
    assert deeper < base


def test_stream_picks_lower_factor(near_book, far_book):
    cfg = ClfVoteConfig(depth=1)
    (tick,) = clf_stream([(1, near_book, far_book)], cfg)
    assert tick.raw_pick == "n"  # far ask ladder is far tighter
    assert not tick.skip


def test_stream_tie_prefers_next(near_book):
    cfg = ClfVoteConfig(depth=1)
    # mirrored ladders with the same price ratio force an exact tie
    snap_c = BookSnapshot(1, bids=((1000, 50), (995, 50)), asks=((1005, 1),))
    snap_n = BookSnapshot(1, bids=((900, 1),), asks=((995, 50), (1000, 50)))
    (tick,) = clf_stream([(1, snap_c, snap_n)], cfg)
    assert tick.clf_c == tick.clf_n
    assert tick.raw_pick == "n"


def test_stream_error_becomes_skip(near_book):
    cfg = ClfVoteConfig(depth=1)
    empty = BookSnapshot(1, (), ())
    (tick,) = clf_stream([(1, empty, near_book)], cfg)
    assert tick.skip and tick.raw_pick is None


def test_ema_of_constant_is_constant():
    ts = [10, 20, 30, 40]
    assert ema_at(ts, [3.5] * 4, 50, halflife_nanos=7) == pytest.approx(3.5)


def _ticks(ts_vals, c_vals, n_vals):
    return [ClfTick(t, c, n, "n" if n <= c else "c", False)
            for t, c, n in zip(ts_vals, c_vals, n_vals)]


def test_decision_constant_ordering():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=1000, ema_halflife_nanos=100)
    ticks = _ticks(range(100, 1001, 100), [2e-4] * 10, [1e-4] * 10)
    decision, diag = clf_decision(ticks, 1000, cfg)
    assert decision == 1
    assert diag["ema_n"] < diag["ema_c"]


def test_decision_majority_mode():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=1000, mode="majority")
    c_vals = [1e-4] * 7 + [2e-4] * 3  # 7 picks for c, 3 for n
    n_vals = [2e-4] * 7 + [1e-4] * 3
    ticks = _ticks(range(100, 1001, 90), c_vals, n_vals)
    decision, diag = clf_decision(ticks, 1000, cfg)
    assert decision == 0
    assert diag["votes_c"] == 7


def test_decision_majority_tie_prefers_next():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=1000, mode="majority")
    ticks = _ticks([100, 200], [1e-4, 2e-4], [2e-4, 1e-4])
    decision, _ = clf_decision(ticks, 1000, cfg)
    assert decision == 1


def test_decision_ema_late_crossing_scalar_reference():
    """The factor of the next month dips below the current month only in
    the last tenth of the window; with a halflife of a tenth of the
    window the smoothed ordering must flip to the next month."""
    window = 1_000
    halflife = window // 10
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=window,
                        ema_halflife_nanos=halflife)
    ts = list(range(10, 1001, 10))
    c_vals = [2e-4] * len(ts)
    n_vals = [3e-4 if t <= 900 else 1e-6 for t in ts]
    ticks = _ticks(ts, c_vals, n_vals)
    decision, diag = clf_decision(ticks, 1_000, cfg)

    def reference(values):
        num = den = 0.0
        for t, v in zip(ts, values):
            w = 2.0 ** (-(1_000 - t) / halflife)
            num += w * v
            den += w
        return num / den

    assert diag["ema_c"] == pytest.approx(reference(c_vals), rel=1e-12)
    assert diag["ema_n"] == pytest.approx(reference(n_vals), rel=1e-12)
    assert reference(n_vals) < reference(c_vals)
    assert decision == 1


def test_decision_no_valid_ticks():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=1000)
    with pytest.raises(NoValidTicks):
        clf_decision([], 1000, cfg)
    skipped = [ClfTick(500, None, None, None, True)]
    with pytest.raises(NoValidTicks):
        clf_decision(skipped, 1000, cfg)


def test_decision_window_boundaries():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=100, ema_halflife_nanos=10)
    ticks = _ticks([900, 950, 1000], [2e-4] * 3, [1e-4] * 3)
    decision, diag = clf_decision(ticks, 1000, cfg)
    # (w1 - vote, w1]: the tick at exactly w1 counts, the one at exactly
    # w1 - vote does not
    assert diag["n_ticks"] == 2
    assert decision == 1


def test_decision_determinism():
    cfg = ClfVoteConfig(depth=1, vote_window_nanos=1000)
    ticks = _ticks(range(100, 1001, 100), [2e-4] * 10, [1e-4] * 10)
    assert clf_decision(ticks, 1000, cfg) == clf_decision(ticks, 1000, cfg)


def test_scale_invariance_of_pick(near_book, far_book):
    cfg = ClfVoteConfig(depth=2)
    (base,) = clf_stream([(1, near_book, far_book)], cfg)
    scale = 3
    scaled_c = BookSnapshot(1, tuple((p * scale, q) for p, q in near_book.bids),
                            tuple((p * scale, q) for p, q in near_book.asks))
    scaled_n = BookSnapshot(1, tuple((p * scale, q) for p, q in far_book.bids),
                            tuple((p * scale, q) for p, q in far_book.asks))
    (scaled,) = clf_stream([(1, scaled_c, scaled_n)], cfg)
    assert scaled.raw_pick == base.raw_pick
