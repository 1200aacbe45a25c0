"""Tick-file ingestion, event normalization, and windowed views.

The input format is a header-carrying delimited text file with columns
``Server_epoch_nanos, Symbol, event_type, side, Price, Qty, OID1, OID2,
Agg, capture_timestampz``.  Event-type codes map ``N`` -> New,
``MODIFY_TICK`` -> Modify, ``CANCEL_TICK`` -> Cancel, ``TRADE`` -> Trade.
"""
from __future__ import annotations

import csv
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, Mapping, Protocol, Sequence

from .money import DEFAULT_TICK_PAISE, PriceError, format_price, parse_price


class EventKind(Enum):
    NEW = "New"
    MODIFY = "Modify"
    CANCEL = "Cancel"
    TRADE = "Trade"


class Side(Enum):
    BID = "Bid"
    ASK = "Ask"
    UNKNOWN = "Unknown"


class Aggressor(Enum):
    BUY = "Buy"
    SELL = "Sell"


class Label(Enum):
    """Event classes; the first six move or threaten the touch price."""

    T_A = "T_A"
    T_B = "T_B"
    C_A = "C_A"
    C_B = "C_B"
    PDM_A = "PDM_A"
    PDM_B = "PDM_B"
    OTHER = "Other"


REF_LABELS: tuple[Label, ...] = (
    Label.T_A,
    Label.T_B,
    Label.C_A,
    Label.C_B,
    Label.PDM_A,
    Label.PDM_B,
)

EVENT_TYPE_CODES: dict[str, EventKind] = {
    "N": EventKind.NEW,
    "MODIFY_TICK": EventKind.MODIFY,
    "CANCEL_TICK": EventKind.CANCEL,
    "TRADE": EventKind.TRADE,
}
_KIND_TO_CODE = {v: k for k, v in EVENT_TYPE_CODES.items()}

COLUMNS: tuple[str, ...] = (
    "Server_epoch_nanos",
    "Symbol",
    "event_type",
    "side",
    "Price",
    "Qty",
    "OID1",
    "OID2",
    "Agg",
    "capture_timestampz",
)


class TickStoreError(Exception):
    pass


class MalformedRow(TickStoreError):
    def __init__(self, row_index: int, reason: str):
        super().__init__(f"row {row_index}: {reason}")
        self.row_index = row_index
        self.reason = reason


class UnknownEventType(MalformedRow):
    def __init__(self, row_index: int, code: str):
        super().__init__(row_index, f"unknown event type {code!r}")
        self.code = code


class NonMonotonicTimestamp(TickStoreError):
    def __init__(self, row_index: int, ts: int, high_water: int, tolerance: int):
        super().__init__(
            f"row {row_index}: timestamp {ts} behind high-water {high_water} "
            f"by more than {tolerance} ns"
        )
        self.row_index = row_index


class BookStateUnavailable(TickStoreError):
    """Classification asked for top-of-book state before warm-up."""


class EmptyGrid(TickStoreError):
    pass


@dataclass(frozen=True, slots=True)
class TickEvent:
    ts_nanos: int
    symbol: str
    kind: EventKind
    side: Side
    price: int  # paise
    qty: int
    oid1: int | None = None
    oid2: int | None = None
    aggressor: Aggressor | None = None


@dataclass(frozen=True, slots=True)
class ClassifiedEvent:
    base: TickEvent
    label: Label

    @property
    def ts_nanos(self) -> int:
        return self.base.ts_nanos


def _resolve_schema(header: list[str], schema: Mapping[str, str] | None,
                    ) -> dict[str, int]:
    names = {name: i for i, name in enumerate(header)}
    mapping = {}
    for logical in COLUMNS:
        actual = (schema or {}).get(logical, logical)
        if actual not in names:
            raise MalformedRow(0, f"missing column {actual!r} in header")
        mapping[logical] = names[actual]
    return mapping


def _parse_row(idx: int, row: list[str], cols: dict[str, int],
               tick_paise: int) -> TickEvent:
    def cell(name: str) -> str:
        i = cols[name]
        return row[i].strip() if i < len(row) else ""

    try:
        ts = int(cell("Server_epoch_nanos"))
    except ValueError:
        raise MalformedRow(idx, f"bad timestamp {cell('Server_epoch_nanos')!r}")
    if ts <= 0:
        raise MalformedRow(idx, f"non-positive timestamp {ts}")

    code = cell("event_type")
    if code not in EVENT_TYPE_CODES:
        raise UnknownEventType(idx, code)
    kind = EVENT_TYPE_CODES[code]

    try:
        price = parse_price(cell("Price"))
    except PriceError as exc:
        raise MalformedRow(idx, str(exc))
    if price % tick_paise != 0:
        raise MalformedRow(
            idx, f"price {format_price(price)} off the {tick_paise}-paise grid")

    try:
        qty = int(cell("Qty"))
    except ValueError:
        raise MalformedRow(idx, f"bad quantity {cell('Qty')!r}")
    if qty <= 0:
        raise MalformedRow(idx, f"non-positive quantity {qty}")

    side_text = cell("side").upper()
    if side_text == "BUY":
        side = Side.BID
    elif side_text == "SELL":
        side = Side.ASK
    elif side_text == "":
        side = Side.UNKNOWN
    else:
        raise MalformedRow(idx, f"bad side {cell('side')!r}")

    agg_text = cell("Agg").upper()
    aggressor = {"BUY": Aggressor.BUY, "SELL": Aggressor.SELL, "": None}.get(agg_text)
    if agg_text and aggressor is None:
        raise MalformedRow(idx, f"bad aggressor {cell('Agg')!r}")

    if kind is EventKind.TRADE and aggressor is None:
        raise MalformedRow(idx, "trade without aggressor")
    if kind is not EventKind.TRADE and side is Side.UNKNOWN:
        raise MalformedRow(idx, f"{kind.value} without side")

    def oid(name: str) -> int | None:
        text = cell(name)
        if not text:
            return None
        try:
            return int(text)
        except ValueError:
            raise MalformedRow(idx, f"bad order id {text!r}")

    return TickEvent(ts, cell("Symbol"), kind, side, price, qty,
                     oid("OID1"), oid("OID2"), aggressor)


def parse_tick_file(
    path,
    schema: Mapping[str, str] | None = None,
    *,
    tick_paise: int = DEFAULT_TICK_PAISE,
    jitter_tolerance_nanos: int | None = 0,
    symbol: str | None = None,
    dedupe_trades: bool = True,
    delimiter: str = ",",
) -> list[TickEvent]:
    """Parse a tick file into a time-ordered event list.

    Rows whose timestamp falls behind the running maximum by no more than
    ``jitter_tolerance_nanos`` are reordered (stable sort); rows further
    behind raise :class:`NonMonotonicTimestamp`.  ``None`` disables the
    check entirely and sorts freely, for extracts that are grouped rather
    than time-ordered.  Trade rows duplicated per counterparty are dropped
    on the key ``(ts, oid1, oid2, price, qty)``.
    """
    events: list[TickEvent] = []
    seen_trades: set[tuple] = set()
    high_water = 0
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            return []
        cols = _resolve_schema([h.strip() for h in header], schema)
        for idx, row in enumerate(reader, start=1):
            if not row or not any(cell.strip() for cell in row):
                continue
            ev = _parse_row(idx, row, cols, tick_paise)
            if symbol is not None and ev.symbol != symbol:
                continue
            if jitter_tolerance_nanos is not None:
                if ev.ts_nanos < high_water - jitter_tolerance_nanos:
                    raise NonMonotonicTimestamp(
                        idx, ev.ts_nanos, high_water, jitter_tolerance_nanos)
            high_water = max(high_water, ev.ts_nanos)
            if dedupe_trades and ev.kind is EventKind.TRADE:
                key = (ev.ts_nanos, ev.oid1, ev.oid2, ev.price, ev.qty)
                if key in seen_trades:
                    continue
                seen_trades.add(key)
            events.append(ev)
    events.sort(key=lambda e: e.ts_nanos)  # stable: file order kept on ties
    return events


def _capture_stamp(ts_nanos: int) -> str:
    secs, nanos = divmod(ts_nanos, 1_000_000_000)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d %H:%M:%S") + f".{nanos:09d}+00"


def write_tick_file(events: Iterable[TickEvent], path,
                    delimiter: str = ",") -> None:
    """Serialize events back to the input column layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(COLUMNS)
        for ev in events:
            side = {Side.BID: "BUY", Side.ASK: "SELL", Side.UNKNOWN: ""}[ev.side]
            agg = ev.aggressor.name if ev.aggressor else ""
            writer.writerow([
                ev.ts_nanos,
                ev.symbol,
                _KIND_TO_CODE[ev.kind],
                side,
                format_price(ev.price),
                ev.qty,
                ev.oid1 if ev.oid1 is not None else "",
                ev.oid2 if ev.oid2 is not None else "",
                agg,
                _capture_stamp(ev.ts_nanos),
            ])


class BookState(Protocol):
    """What classification needs from a live book."""

    def best_bid(self) -> int | None: ...

    def best_ask(self) -> int | None: ...

    def apply_event(self, ev: TickEvent) -> None: ...


def classify_events(
    events: Iterable[TickEvent],
    book: BookState,
    *,
    strict_warmup: bool = False,
    diagnostics: dict | None = None,
) -> list[ClassifiedEvent]:
    """Label each event by its impact on the touch, replaying ``book``.

    Trades label by aggressor side; cancels are top-level iff they hit the
    current best price of their side; a modify is a price-down move iff the
    side's best strictly worsens across the event.  Cancels and modifies
    that arrive before the side has any depth are labelled Other in lenient
    mode and raise :class:`BookStateUnavailable` when ``strict_warmup``.
    """
    out: list[ClassifiedEvent] = []
    diag = diagnostics if diagnostics is not None else {}
    diag.setdefault("warmup_events", 0)
    for ev in events:
        label = Label.OTHER
        if ev.kind is EventKind.TRADE:
            label = Label.T_A if ev.aggressor is Aggressor.BUY else Label.T_B
            book.apply_event(ev)
        elif ev.kind is EventKind.CANCEL:
            best = book.best_bid() if ev.side is Side.BID else book.best_ask()
            if best is None:
                if strict_warmup:
                    raise BookStateUnavailable(
                        f"cancel at ts={ev.ts_nanos} before book warm-up")
                diag["warmup_events"] += 1
            elif ev.price == best:
                label = Label.C_B if ev.side is Side.BID else Label.C_A
            book.apply_event(ev)
        elif ev.kind is EventKind.MODIFY:
            if ev.side is Side.BID:
                before = book.best_bid()
                book.apply_event(ev)
                after = book.best_bid()
                if before is None:
                    if strict_warmup:
                        raise BookStateUnavailable(
                            f"modify at ts={ev.ts_nanos} before book warm-up")
                    diag["warmup_events"] += 1
                elif after is not None and after < before:
                    label = Label.PDM_B
            else:
                before = book.best_ask()
                book.apply_event(ev)
                after = book.best_ask()
                if before is None:
                    if strict_warmup:
                        raise BookStateUnavailable(
                            f"modify at ts={ev.ts_nanos} before book warm-up")
                    diag["warmup_events"] += 1
                elif after is not None and after > before:
                    label = Label.PDM_A
        else:
            book.apply_event(ev)
        out.append(ClassifiedEvent(ev, label))
    return out


@dataclass(frozen=True)
class WindowGrid:
    """Strided half-open intervals ``[w1, w1 + width)`` inside a span."""

    start_nanos: int
    end_nanos: int
    step_nanos: int
    width_nanos: int

    def __post_init__(self):
        if self.step_nanos <= 0 or self.width_nanos <= 0:
            raise ValueError("step and width must be positive")
        if self.end_nanos < self.start_nanos:
            raise ValueError("end before start")

    def __len__(self) -> int:
        span = self.end_nanos - self.start_nanos - self.width_nanos
        return 0 if span < 0 else span // self.step_nanos + 1

    def window(self, k: int) -> tuple[int, int]:
        if not 0 <= k < len(self):
            raise IndexError(k)
        w1 = self.start_nanos + k * self.step_nanos
        return w1, w1 + self.width_nanos

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for k in range(len(self)):
            yield self.window(k)

    def index_containing(self, w1: int, w2: int) -> int | None:
        """Index of the grid window containing ``[w1, w2)``, if any."""
        if w1 < self.start_nanos:
            return None
        k = (w1 - self.start_nanos) // self.step_nanos
        for cand in (k, k - 1):
            if 0 <= cand < len(self):
                g1, g2 = self.window(cand)
                if g1 <= w1 and w2 <= g2:
                    return cand
        return None


class SliceView(Sequence):
    """Zero-copy window over an underlying event sequence."""

    __slots__ = ("_base", "_lo", "_hi")

    def __init__(self, base: Sequence, lo: int, hi: int):
        self._base = base
        self._lo = lo
        self._hi = max(lo, hi)

    def __len__(self) -> int:
        return self._hi - self._lo

    def __getitem__(self, i):
        if isinstance(i, slice):
            lo, hi, step = i.indices(len(self))
            if step != 1:
                return [self[j] for j in range(lo, hi, step)]
            return SliceView(self._base, self._lo + lo, self._lo + hi)
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return self._base[self._lo + i]


@dataclass(frozen=True)
class WindowView:
    w1: int
    w2: int
    history: SliceView
    future: SliceView


def _ts_of(ev) -> int:
    return ev.ts_nanos


def window_events(
    events: Sequence,
    grid: WindowGrid,
    lookback_nanos: int,
) -> list[WindowView]:
    """Per-window views: history in ``(w1 - lookback, w1)``, future in
    ``[w1, w2)``.  Events must be time-ordered."""
    if lookback_nanos <= 0:
        raise ValueError("lookback must be positive")
    if len(grid) == 0:
        raise EmptyGrid(f"grid over [{grid.start_nanos}, {grid.end_nanos}) is empty")
    ts = [_ts_of(e) for e in events]
    views = []
    for w1, w2 in grid:
        h_lo = bisect_right(ts, w1 - lookback_nanos)
        h_hi = bisect_left(ts, w1)
        f_hi = bisect_left(ts, w2)
        views.append(WindowView(w1, w2,
                                SliceView(events, h_lo, h_hi),
                                SliceView(events, h_hi, f_hi)))
    return views
