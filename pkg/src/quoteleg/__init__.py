"""Reference-leg selection engine for calendar-spread quoting.

Ingests tick-by-tick order-flow files for two futures contracts, maintains
top-of-book ladders, and scores three reference-leg selection rules - a
Hawkes arrival-ratio forecast, a composite liquidity factor, and a
hindsight market-optimal oracle - with agreement metrics and a
superior-predictive-ability test.
"""

__version__ = "0.1.0"

from . import benchmark, clf, hawkes, lob, money, spreadexec, synth, tickstore

__all__ = [
    "benchmark",
    "clf",
    "hawkes",
    "lob",
    "money",
    "spreadexec",
    "synth",
    "tickstore",
    "__version__",
]
