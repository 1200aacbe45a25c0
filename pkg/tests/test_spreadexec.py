import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from quoteleg.money import from_inr
from quoteleg.spreadexec import (
    EntryExit,
    NonPositiveQuote,
    SpreadTrade,
    entry_exit_profit,
    quote_price,
    realized_spread_and_slippage,
    theoretical_spread,
)


def test_entry_exit_profit_worked_example():
    # all in paise: 17514.20 / 17458.55 entry, 17510.00 / 17460.00 exit
    result = entry_exit_profit(1751420, 1745855, 1751000, 1746000)
    assert result == EntryExit(s_entry=5565, s_exit=5000, profit=565)


def test_entry_exit_zero_profit_on_identical_quotes():
    result = entry_exit_profit(1751420, 1745855, 1751420, 1745855)
    assert result.profit == 0


def test_entry_exit_negative_profit_sign():
    result = entry_exit_profit(1751000, 1746000, 1751420, 1745855)
    assert result.s_exit > result.s_entry
    assert result.profit < 0


def test_realized_spread_current_month_reference():
    realized, slip = realized_spread_and_slippage("c", 1751420, 1745800, 5850)
    assert (realized, slip) == (5620, 230)  # 56.2 and 2.3 INR


def test_realized_spread_next_month_reference():
    realized, slip = realized_spread_and_slippage("n", 1745855, 1751655, 5850)
    assert (realized, slip) == (5800, 50)  # 58.0 and 0.5 INR


def test_zero_slippage_when_realized_matches():
    realized, slip = realized_spread_and_slippage("n", 1745800, 1751650, 5850)
    assert realized == 5850 and slip == 0


@given(st.integers(-100_000, 100_000), st.integers(-100_000, 100_000))
def test_slippage_symmetry(s, s_tilde):
    # |realized - mandated| is symmetric under swapping the two spreads
    _, a = realized_spread_and_slippage("n", 0 + 10**6, s_tilde + 10**6, s)
    _, b = realized_spread_and_slippage("n", 0 + 10**6, s + 10**6, s_tilde)
    assert a == b


@given(st.integers(-5_000, 5_000))
def test_negative_target_spreads_supported(s):
    realized, slip = realized_spread_and_slippage("c", 1751420, 1745800, s)
    assert realized == 5620
    assert slip == abs(5620 - s)
    quote = quote_price("n", 1751650, s)
    assert quote == 1751650 - s


def test_quote_price_next_month_reference():
    assert quote_price("n", from_inr(17516.50), from_inr(58.50)) == from_inr(17458.00)


def test_quote_price_zero_spread_equals_reference():
    assert quote_price("n", 1751650, 0) == 1751650


def test_quote_price_current_month_reference_coherent_default():
    assert quote_price("c", from_inr(17455), from_inr(58.50)) == from_inr(17513.50)


def test_quote_price_current_month_printed_variant_goes_negative():
    with pytest.raises(NonPositiveQuote):
        quote_price("c", from_inr(17455), from_inr(58.50), printed_case1=True)
    # tiny reference, large spread: the printed form stays positive
    assert quote_price("c", 100, 500, printed_case1=True) == 400


def test_next_month_identity_when_reference_unchanged():
    # quote derived from the touch; reference side never moves: realized
    # spread equals the mandate exactly
    ref = from_inr(17516.50)
    s = from_inr(58.50)
    quote = quote_price("n", ref, s)
    realized, slip = realized_spread_and_slippage("n", quote, ref, s)
    assert realized == s and slip == 0


def test_theoretical_spread_zero_cases():
    assert theoretical_spread(17455.0, 0.0, 0.5) == 0.0
    assert theoretical_spread(17455.0, 0.05, 0.0) == 0.0


def test_theoretical_spread_scalar_value():
    got = theoretical_spread(17455.0, 0.05, 0.1)
    assert got == pytest.approx(17455 * (math.exp(0.005) - 1), rel=1e-12)
    assert got == pytest.approx(87.49355160084374, rel=1e-9)


def test_spread_trade_validation():
    trade = SpreadTrade(t0=1, t1=2, t2=3, reference_leg="n",
                        mandated_spread=5850, quote_price=1745800,
                        ref_exec_price=1751655, realized_spread=5800,
                        slippage=50)
    assert trade.slippage == 50
    with pytest.raises(ValueError):
        SpreadTrade(t0=3, t1=2, t2=3, reference_leg="n", mandated_spread=0,
                    quote_price=1, ref_exec_price=1, realized_spread=0,
                    slippage=0)
    with pytest.raises(ValueError):
        SpreadTrade(t0=1, t1=2, t2=3, reference_leg="n", mandated_spread=100,
                    quote_price=1, ref_exec_price=1, realized_spread=50,
                    slippage=10)
