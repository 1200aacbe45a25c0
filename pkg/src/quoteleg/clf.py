"""Composite liquidity factor: log price-gap per log cumulative depth.

For the current-month contract the factor reads the bid ladder; for the
next-month contract the ask ladder.  Lower values mean a flatter, deeper
ladder and thus less instantaneous slippage risk.  Tick-level values are
smoothed (EMA by default, majority vote optionally) into one binary
reference-leg decision per evaluation window; ties pick the next month.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .lob import BookSnapshot
from .tickstore import Side


class ClfError(Exception):
    pass


class InsufficientLevels(ClfError):
    pass


class DegenerateDepth(ClfError):
    """Cumulative quantity of 1 or less: the log-depth denominator dies."""


class NonPositiveNumerator(ClfError):
    """Ladder not strictly ordered; signals upstream book corruption."""


class NoValidTicks(ClfError):
    pass


@dataclass(frozen=True)
class ClfValue:
    contract: str  # 'c' or 'n'
    side: Side
    depth: int
    value: float


def _ladder_factor(prices: Sequence[int], qtys: Sequence[int], depth: int,
                   rising: bool) -> float:
    if depth < 1:
        raise InsufficientLevels("depth must be >= 1")
    if len(prices) < depth + 1:
        raise InsufficientLevels(
            f"need {depth + 1} levels, ladder has {len(prices)}")
    p1, p_far = prices[0], prices[depth]
    gap = (p_far / p1) if rising else (p1 / p_far)
    if gap <= 1.0:
        raise NonPositiveNumerator(
            f"level {depth + 1} price {p_far} not beyond touch {p1}")
    cum_qty = sum(qtys[:depth])
    if cum_qty <= 1:
        raise DegenerateDepth(f"cumulative quantity {cum_qty} at touch")
    return math.log(gap) / math.log(cum_qty)


def clf_current_bid(snap: BookSnapshot, depth: int) -> ClfValue:
    """Factor over the current month's bid ladder at the given depth."""
    prices = [p for p, _ in snap.bids]
    qtys = [q for _, q in snap.bids]
    return ClfValue("c", Side.BID, depth,
                    _ladder_factor(prices, qtys, depth, rising=False))


def clf_next_ask(snap: BookSnapshot, depth: int) -> ClfValue:
    """Factor over the next month's ask ladder at the given depth."""
    prices = [p for p, _ in snap.asks]
    qtys = [q for _, q in snap.asks]
    return ClfValue("n", Side.ASK, depth,
                    _ladder_factor(prices, qtys, depth, rising=True))


@dataclass(frozen=True)
class ClfVoteConfig:
    depth: int = 4
    ema_halflife_nanos: int = 200_000_000  # vote window / 5
    vote_window_nanos: int = 1_000_000_000
    mode: str = "ema"  # 'ema' or 'majority'
    default_leg: int = 1  # ties and fallbacks pick the next month

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.ema_halflife_nanos <= 0 or self.vote_window_nanos <= 0:
            raise ValueError("halflife and vote window must be positive")
        if self.mode not in ("ema", "majority"):
            raise ValueError(f"bad mode {self.mode!r}")


@dataclass(frozen=True)
class ClfTick:
    ts_nanos: int
    clf_c: float | None
    clf_n: float | None
    raw_pick: str | None  # 'c', 'n', or None when skipped
    skip: bool


def clf_stream(ticks: Iterable[tuple[int, BookSnapshot, BookSnapshot]],
               cfg: ClfVoteConfig) -> list[ClfTick]:
    """Per-tick factors for both contracts; per-tick errors become skip
    flags rather than exceptions."""
    out = []
    for ts, snap_c, snap_n in ticks:
        val_c = val_n = None
        try:
            val_c = clf_current_bid(snap_c, cfg.depth).value
        except ClfError:
            pass
        try:
            val_n = clf_next_ask(snap_n, cfg.depth).value
        except ClfError:
            pass
        if val_c is None or val_n is None:
            out.append(ClfTick(ts, val_c, val_n, None, True))
            continue
        pick = "n" if val_n <= val_c else "c"
        out.append(ClfTick(ts, val_c, val_n, pick, False))
    return out


def ema_at(ts: Sequence[int], values: Sequence[float], t_ref: int,
           halflife_nanos: int) -> float:
    """Half-life weighted average of irregular samples, evaluated at
    ``t_ref``: weight ``2**(-(t_ref - t) / halflife)``."""
    num = den = 0.0
    for t, v in zip(ts, values):
        w = 2.0 ** (-(t_ref - t) / halflife_nanos)
        num += w * v
        den += w
    if den == 0.0:
        raise NoValidTicks("no samples to smooth")
    return num / den


def clf_decision(ticks: Sequence[ClfTick], w1: int,
                 cfg: ClfVoteConfig) -> tuple[int, dict]:
    """Binary decision for the window starting at ``w1`` from ticks in
    ``(w1 - vote_window, w1]``.

    EMA mode smooths each contract's factor separately and picks the next
    month iff its smoothed value is lower or equal; majority mode counts
    raw picks.  Raises :class:`NoValidTicks` when the window is empty.
    """
    lo = w1 - cfg.vote_window_nanos
    in_window = [t for t in ticks if lo < t.ts_nanos <= w1]
    diag: dict = {"n_ticks": len(in_window),
                  "n_skipped": sum(t.skip for t in in_window)}
    if cfg.mode == "ema":
        c_ts = [t.ts_nanos for t in in_window if t.clf_c is not None]
        c_vals = [t.clf_c for t in in_window if t.clf_c is not None]
        n_ts = [t.ts_nanos for t in in_window if t.clf_n is not None]
        n_vals = [t.clf_n for t in in_window if t.clf_n is not None]
        if not c_vals or not n_vals:
            raise NoValidTicks(f"window ending {w1} has no usable ticks")
        ema_c = ema_at(c_ts, c_vals, w1, cfg.ema_halflife_nanos)
        ema_n = ema_at(n_ts, n_vals, w1, cfg.ema_halflife_nanos)
        diag.update(ema_c=ema_c, ema_n=ema_n)
        return (1 if ema_n <= ema_c else 0), diag
    picks = [t.raw_pick for t in in_window if not t.skip]
    if not picks:
        raise NoValidTicks(f"window ending {w1} has no usable ticks")
    votes_n = sum(1 for p in picks if p == "n")
    votes_c = len(picks) - votes_n
    diag.update(votes_n=votes_n, votes_c=votes_c)
    return (1 if votes_n >= votes_c else 0), diag
