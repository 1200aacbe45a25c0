"""Calendar-spread arithmetic: entry/exit spreads, quoting prices,
realized spreads, slippage, and the cost-of-carry spread.

All price arguments are integer paise so the worked-example goldens hold
with zero tolerance; target spreads may be negative (contango).
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class SpreadError(Exception):
    pass


class NonPositiveQuote(SpreadError):
    """A computed quoting price came out non-positive, which signals an
    inconsistent target spread for the chosen reference leg."""


@dataclass(frozen=True)
class EntryExit:
    s_entry: int
    s_exit: int
    profit: int


@dataclass(frozen=True)
class SpreadTrade:
    """One asymmetric spread execution: quote at t0, quoting-leg fill at
    t1, reference-leg fill at t2."""

    t0: int
    t1: int
    t2: int
    reference_leg: str  # 'c' or 'n'
    mandated_spread: int
    quote_price: int
    ref_exec_price: int
    realized_spread: int
    slippage: int

    def __post_init__(self):
        if not self.t0 <= self.t1 <= self.t2:
            raise ValueError("times must satisfy t0 <= t1 <= t2")
        if self.reference_leg not in ("c", "n"):
            raise ValueError(f"bad reference leg {self.reference_leg!r}")
        if self.slippage != abs(self.realized_spread - self.mandated_spread):
            raise ValueError("slippage must equal |realized - mandated|")


def entry_exit_profit(entry_bid_n: int, entry_ask_c: int,
                      exit_ask_n: int, exit_bid_c: int) -> EntryExit:
    """Per-unit profit of entering at (sell n bid, buy c ask) and exiting
    at (buy n ask, sell c bid)."""
    s_entry = entry_bid_n - entry_ask_c
    s_exit = exit_ask_n - exit_bid_c
    return EntryExit(s_entry, s_exit, s_entry - s_exit)


def quote_price(reference_leg: str, ref_price: int, target_spread: int,
                *, printed_case1: bool = False) -> int:
    """Limit price for the quoting leg given the reference price.

    With the next month as reference the quote on the current month is
    ``ref - S``.  With the current month as reference the default quote on
    the next month is ``ref + S``; ``printed_case1`` switches to the
    ``S - ref`` variant, which goes non-positive for realistic magnitudes.
    """
    if ref_price <= 0:
        raise ValueError("reference price must be positive")
    if reference_leg == "n":
        quote = ref_price - target_spread
    elif reference_leg == "c":
        quote = target_spread - ref_price if printed_case1 else ref_price + target_spread
    else:
        raise ValueError(f"bad reference leg {reference_leg!r}")
    if quote <= 0:
        raise NonPositiveQuote(
            f"reference {reference_leg!r} at {ref_price} with spread "
            f"{target_spread} quotes {quote}")
    return quote


def realized_spread_and_slippage(case: str, quoting_fill: int, ref_fill: int,
                                 target_spread: int) -> tuple[int, int]:
    """Realized spread and slippage once both legs have filled.

    ``case`` names the reference leg: with ``'c'`` the quoting fill is the
    next-month bid-side fill and the spread is quoting minus reference;
    with ``'n'`` the reference fill is the next-month ask-side fill and the
    spread is reference minus quoting.
    """
    if case == "c":
        realized = quoting_fill - ref_fill
    elif case == "n":
        realized = ref_fill - quoting_fill
    else:
        raise ValueError(f"bad case {case!r}")
    return realized, abs(realized - target_spread)


def theoretical_spread(p_c: float, rate: float, t: float) -> float:
    """Cost-of-carry spread ``p_c * (exp(rate * t) - 1)`` in the price's
    own units."""
    if p_c <= 0:
        raise ValueError("price must be positive")
    return p_c * math.expm1(rate * t)
