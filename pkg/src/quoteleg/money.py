"""Fixed-point INR price arithmetic.

Prices travel through the engine as integer hundredths of a rupee
("paise") so that spread and slippage arithmetic on the 0.05-INR tick
grid is exact.  Floats only appear at display boundaries and inside
scale-free computations (VWAP, log ratios).
"""
from __future__ import annotations

PAISE_PER_INR = 100

# NSE futures quote in 0.05 INR increments.
DEFAULT_TICK_PAISE = 5


class PriceError(ValueError):
    """A price string or value that cannot be represented on the grid."""


def parse_price(text: str) -> int:
    """Parse a decimal INR string like ``"17455.10"`` into paise."""
    s = text.strip()
    if not s:
        raise PriceError("empty price")
    if s.startswith("-"):
        raise PriceError(f"negative price {text!r}")
    whole, _, frac = s.partition(".")
    if not whole.isdigit() or (frac and not frac.isdigit()):
        raise PriceError(f"bad price {text!r}")
    frac = (frac + "00")[:2] if len(frac) <= 2 else frac
    if len(frac) > 2:
        if frac[2:].strip("0"):
            raise PriceError(f"price {text!r} finer than 0.01 INR")
        frac = frac[:2]
    return int(whole) * PAISE_PER_INR + int(frac or "0")


def format_price(paise: int) -> str:
    """Render paise as a two-decimal INR string."""
    if paise < 0:
        return "-" + format_price(-paise)
    return f"{paise // PAISE_PER_INR}.{paise % PAISE_PER_INR:02d}"


def from_inr(value: float | int | str) -> int:
    """Convert an INR amount to paise, rounding to the nearest paisa."""
    if isinstance(value, str):
        return parse_price(value)
    return int(round(value * PAISE_PER_INR))


def to_inr(paise: int) -> float:
    return paise / PAISE_PER_INR


def on_tick(paise: int, tick_paise: int = DEFAULT_TICK_PAISE) -> bool:
    return paise % tick_paise == 0


def round_to_tick(paise: float, tick_paise: int = DEFAULT_TICK_PAISE) -> int:
    """Snap a fractional paise amount to the nearest tick multiple."""
    return int(round(paise / tick_paise)) * tick_paise
