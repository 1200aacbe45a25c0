"""Price-level order book with top-depth snapshots and VWAP references.

The book aggregates quantity per price level and keeps a minimal order-id
map so modifies can be re-priced and cancels routed; it does not model
queue position.  Trades decrement the resting side at the trade price.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .money import to_inr
from .tickstore import Aggressor, EventKind, Side, TickEvent


class LobError(Exception):
    pass


class NegativeDepth(LobError):
    """An event would drive a level's quantity below zero (strict mode)."""


class InsufficientDepth(LobError):
    pass


@dataclass(frozen=True)
class BookSnapshot:
    """Immutable top-of-book ladder; best level first on both sides."""

    ts_nanos: int
    bids: tuple[tuple[int, int], ...]  # (price paise, qty), price descending
    asks: tuple[tuple[int, int], ...]  # price ascending
    crossed: bool = False

    def __post_init__(self):
        for prices, rising in ((self.bids, False), (self.asks, True)):
            last = None
            for price, qty in prices:
                if qty <= 0:
                    raise ValueError("non-positive level quantity")
                if last is not None and ((price > last) != rising or price == last):
                    raise ValueError("ladder not strictly ordered")
                last = price

    @property
    def ready(self) -> bool:
        return bool(self.bids) and bool(self.asks)

    def best_bid(self) -> int | None:
        return self.bids[0][0] if self.bids else None

    def best_ask(self) -> int | None:
        return self.asks[0][0] if self.asks else None


class Book:
    """Mutable book state for one contract, replayed in event order."""

    def __init__(self, symbol: str, depth: int = 5, strict: bool = False):
        self.symbol = symbol
        self.depth = depth
        self.strict = strict
        self._bids: dict[int, int] = {}
        self._asks: dict[int, int] = {}
        self._orders: dict[int, tuple[Side, int, int]] = {}
        self.diagnostics = {
            "negative_depth_clamps": 0,
            "unknown_modify_oids": 0,
            "crossed_snapshots": 0,
        }

    def best_bid(self) -> int | None:
        return max(self._bids) if self._bids else None

    def best_ask(self) -> int | None:
        return min(self._asks) if self._asks else None

    def _levels(self, side: Side) -> dict[int, int]:
        return self._bids if side is Side.BID else self._asks

    def _add(self, side: Side, price: int, qty: int) -> None:
        levels = self._levels(side)
        levels[price] = levels.get(price, 0) + qty

    def _remove(self, side: Side, price: int, qty: int) -> None:
        levels = self._levels(side)
        have = levels.get(price, 0)
        if qty > have:
            if self.strict:
                raise NegativeDepth(
                    f"{self.symbol}: removing {qty} from {have} at {price}")
            self.diagnostics["negative_depth_clamps"] += 1
            qty = have
        left = have - qty
        if left > 0:
            levels[price] = left
        else:
            levels.pop(price, None)

    def apply_event(self, ev: TickEvent) -> None:
        if ev.symbol != self.symbol:
            raise ValueError(f"event for {ev.symbol} applied to {self.symbol}")
        if ev.kind is EventKind.NEW:
            self._add(ev.side, ev.price, ev.qty)
            if ev.oid1 is not None:
                self._orders[ev.oid1] = (ev.side, ev.price, ev.qty)
        elif ev.kind is EventKind.CANCEL:
            self._remove(ev.side, ev.price, ev.qty)
            if ev.oid1 is not None and ev.oid1 in self._orders:
                side, price, qty = self._orders[ev.oid1]
                left = qty - ev.qty
                if left > 0:
                    self._orders[ev.oid1] = (side, price, left)
                else:
                    self._orders.pop(ev.oid1, None)
        elif ev.kind is EventKind.MODIFY:
            old = self._orders.pop(ev.oid1, None) if ev.oid1 is not None else None
            if old is not None:
                old_side, old_price, old_qty = old
                self._remove(old_side, old_price, old_qty)
            else:
                self.diagnostics["unknown_modify_oids"] += 1
            self._add(ev.side, ev.price, ev.qty)
            if ev.oid1 is not None:
                self._orders[ev.oid1] = (ev.side, ev.price, ev.qty)
        elif ev.kind is EventKind.TRADE:
            resting = Side.ASK if ev.aggressor is Aggressor.BUY else Side.BID
            self._remove(resting, ev.price, ev.qty)
            if ev.oid2 is not None and ev.oid2 in self._orders:
                side, price, qty = self._orders[ev.oid2]
                if side is resting and price == ev.price:
                    left = qty - ev.qty
                    if left > 0:
                        self._orders[ev.oid2] = (side, price, left)
                    else:
                        self._orders.pop(ev.oid2, None)

    def snapshot(self, ts_nanos: int) -> BookSnapshot:
        """Top-``depth`` copy of both sides; crossed states are flagged,
        never raised."""
        bids = sorted(self._bids.items(), key=lambda kv: -kv[0])[: self.depth]
        asks = sorted(self._asks.items())[: self.depth]
        crossed = bool(bids and asks and bids[0][0] >= asks[0][0])
        if crossed:
            self.diagnostics["crossed_snapshots"] += 1
        return BookSnapshot(ts_nanos, tuple(bids), tuple(asks), crossed=crossed)


def replay(events, symbol: str, depth: int = 5, strict: bool = False) -> Book:
    book = Book(symbol, depth=depth, strict=strict)
    for ev in events:
        book.apply_event(ev)
    return book


def vwap_reference(snap: BookSnapshot, side: Side, levels: int) -> float:
    """Quantity-weighted average price (INR) over the top ``levels`` of
    one side."""
    ladder = snap.bids if side is Side.BID else snap.asks
    if levels < 1:
        raise InsufficientDepth("need at least one level")
    if levels > len(ladder):
        raise InsufficientDepth(
            f"asked for {levels} levels, side has {len(ladder)}")
    top = ladder[:levels]
    qty = sum(q for _, q in top)
    return to_inr(sum(p * q for p, q in top)) / qty


def snapshot_record(snap: BookSnapshot, depth: int) -> dict:
    """Flat record with a stable column order, for snapshot dumps."""
    rec: dict = {"ts_nanos": snap.ts_nanos, "crossed": snap.crossed}
    for i in range(depth):
        bid = snap.bids[i] if i < len(snap.bids) else (None, None)
        ask = snap.asks[i] if i < len(snap.asks) else (None, None)
        rec[f"bid_px_{i + 1}"] = bid[0]
        rec[f"bid_qty_{i + 1}"] = bid[1]
        rec[f"ask_px_{i + 1}"] = ask[0]
        rec[f"ask_qty_{i + 1}"] = ask[1]
    return rec
