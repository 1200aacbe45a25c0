"""Shared fixtures: two NIFTY-style futures ladders and tick-file helpers."""
from __future__ import annotations

import pytest

from quoteleg.lob import BookSnapshot
from quoteleg.money import from_inr
from quoteleg.tickstore import COLUMNS


def ladder(levels):
    return tuple((from_inr(p), q) for p, q in levels)


@pytest.fixture
def near_book() -> BookSnapshot:
    """Near-month contract: tight touch, a 48.9 INR air pocket at bid
    level 3."""
    return BookSnapshot(
        ts_nanos=1,
        bids=ladder([(17455, 50), (17450, 50), (17401.10, 100),
                     (17376, 800), (17355, 100)]),
        asks=ladder([(17458.55, 50), (17459.65, 50), (17459.95, 100),
                     (17460, 550), (17475, 250)]),
    )


@pytest.fixture
def far_book() -> BookSnapshot:
    """Far-month contract: dense ask ladder around 17516.5."""
    return BookSnapshot(
        ts_nanos=1,
        bids=ladder([(17514.20, 50), (17510.20, 150), (17510.10, 100),
                     (17509.10, 150), (17503.60, 50)]),
        asks=ladder([(17516.50, 150), (17516.55, 50), (17516.70, 50),
                     (17517.20, 50), (17523.40, 200)]),
    )


def write_rows(path, rows):
    """Write a tick file from (ts, symbol, event_type, side, price, qty,
    oid1, oid2, agg) tuples."""
    lines = [",".join(COLUMNS)]
    for ts, symbol, etype, side, price, qty, oid1, oid2, agg in rows:
        lines.append(
            f"{ts},{symbol},{etype},{side},{price},{qty},{oid1},{oid2},{agg},stamp")
    path.write_text("\n".join(lines) + "\n")
    return path
