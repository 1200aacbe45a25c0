"""Market-optimal oracle, agreement scoring, forecast loss, and the
superior-predictive-ability test.

The oracle pairs a passive fill on one contract with the aggressive
completion on the other within a short critical interval, keeps only
pairs consistent with rolling the spread (sell current month, buy next
month), and lets the window's minimum realized spread name the leg that
traded first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .tickstore import Aggressor, ClassifiedEvent, EventKind, TickEvent, WindowGrid

MISSING = -1


class BenchmarkError(Exception):
    pass


class NoOverlap(BenchmarkError):
    pass


class DegenerateVariance(BenchmarkError):
    """All rival loss differentials have zero variance."""


@dataclass(frozen=True)
class TradePair:
    t1: int
    t2: int
    first_leg: str  # contract that traded first: 'c' or 'n'
    passive_price: int     # paise, first fill
    aggressive_price: int  # paise, second fill
    realized_spread: int   # paise, next-month price minus current-month price

    def __post_init__(self):
        if self.t2 < self.t1:
            raise ValueError("pair end before start")
        if self.first_leg not in ("c", "n"):
            raise ValueError(f"bad first leg {self.first_leg!r}")


@dataclass(frozen=True)
class PairingConfig:
    max_critical_interval_nanos: int = 10_000_000

    def __post_init__(self):
        if self.max_critical_interval_nanos <= 0:
            raise ValueError("critical interval must be positive")


def _as_trade(ev) -> TickEvent | None:
    base = ev.base if isinstance(ev, ClassifiedEvent) else ev
    return base if base.kind is EventKind.TRADE else None


def _rollover_role(contract: str, trade: TickEvent) -> str | None:
    """'first' or 'second' leg role this trade can play in a rollover
    (sell current / buy next), or None when its direction does not fit.

    A passive fill shows the counterparty as aggressor, so the current
    month's passive sell prints with a BUY aggressor and the next month's
    passive buy prints with a SELL aggressor; the aggressive completions
    print the trader's own direction.
    """
    if contract == "c":
        if trade.aggressor is Aggressor.BUY:
            return "first"
        return "second"
    if trade.aggressor is Aggressor.SELL:
        return "first"
    return "second"


def extract_trade_pairs(
    events_c: Iterable,
    events_n: Iterable,
    window: tuple[int, int] | None = None,
    cfg: PairingConfig = PairingConfig(),
) -> list[TradePair]:
    """Greedy earliest-first pairing of rollover trades.

    Each trade joins at most one pair; a second-leg trade takes the
    earliest unmatched first-leg trade on the other contract within the
    critical interval.
    """
    trades: list[tuple[int, str, TickEvent]] = []
    for contract, stream in (("c", events_c), ("n", events_n)):
        for ev in stream:
            trade = _as_trade(ev)
            if trade is None:
                continue
            if window is not None and not window[0] <= trade.ts_nanos < window[1]:
                continue
            trades.append((trade.ts_nanos, contract, trade))
    trades.sort(key=lambda item: (item[0], item[1]))

    cap = cfg.max_critical_interval_nanos
    waiting: dict[str, list[tuple[int, TickEvent]]] = {"c": [], "n": []}
    pairs: list[TradePair] = []
    for ts, contract, trade in trades:
        role = _rollover_role(contract, trade)
        if role == "first":
            waiting[contract].append((ts, trade))
            continue
        other = "n" if contract == "c" else "c"
        queue = waiting[other]
        while queue and ts - queue[0][0] > cap:
            queue.pop(0)
        if not queue:
            continue
        t_first, first_trade = queue.pop(0)
        if other == "c":
            spread = trade.price - first_trade.price  # n second, c first
        else:
            spread = first_trade.price - trade.price  # n first, c second
        pairs.append(TradePair(t_first, ts, other, first_trade.price,
                               trade.price, spread))
    return pairs


def oracle_decision(pairs: Sequence[TradePair],
                    window: tuple[int, int] | None = None) -> int:
    """1 when the minimum-spread pair traded the current month first (the
    reference leg was the next month), 0 otherwise, MISSING without
    pairs."""
    if window is not None:
        pairs = [p for p in pairs if window[0] <= p.t1 and p.t2 < window[1]]
    if not pairs:
        return MISSING
    best = min(pairs, key=lambda p: (p.realized_spread, p.t1))
    return 1 if best.first_leg == "c" else 0


@dataclass(frozen=True)
class DecisionSeries:
    grid: WindowGrid
    values: np.ndarray  # int8 per window: 0, 1, or MISSING
    rule_name: str

    def __post_init__(self):
        if len(self.values) != len(self.grid):
            raise ValueError("one decision per grid window required")
        bad = ~np.isin(self.values, (0, 1, MISSING))
        if bad.any():
            raise ValueError("decisions must be 0, 1, or missing")


@dataclass(frozen=True)
class AgreementResult:
    score: float
    n_scored: int


def agreement_score(chi: DecisionSeries, chi_m: DecisionSeries) -> AgreementResult:
    """Fraction of windows where both series decide and agree."""
    if chi.grid != chi_m.grid:
        raise ValueError("series must share one grid")
    a = np.asarray(chi.values)
    b = np.asarray(chi_m.values)
    both = (a != MISSING) & (b != MISSING)
    n = int(both.sum())
    if n == 0:
        raise NoOverlap("no window where both rules decide")
    return AgreementResult(float((a[both] == b[both]).mean()), n)


def map_to_grid(oracle: DecisionSeries, grid: WindowGrid,
                rule_name: str | None = None) -> DecisionSeries:
    """Oracle labels carried onto a finer decision grid by containment."""
    values = np.full(len(grid), MISSING, dtype=np.int8)
    for k, (w1, w2) in enumerate(grid):
        idx = oracle.grid.index_containing(w1, w2)
        if idx is not None:
            values[k] = oracle.values[idx]
    return DecisionSeries(grid, values, rule_name or oracle.rule_name)


@dataclass(frozen=True)
class LossSeries:
    values: np.ndarray  # float per window; NaN marks unscored windows
    rule_name: str


def loglik_loss(
    realized_counts: Sequence[int],
    simulated_count_samples: Sequence[Sequence[int]],
    smoothing: float = 1.0,
    rule_name: str = "",
) -> LossSeries:
    """Negative log probability of each realized count under the smoothed
    empirical distribution of its window's simulated counts.

    Smoothing adds ``smoothing`` pseudo-mass to every count in
    ``{0, ..., max_simulated + 1}``; realized counts outside that support
    receive the unobserved-count mass, keeping every loss finite.
    """
    out = np.full(len(realized_counts), np.nan)
    for w, (realized, samples) in enumerate(
            zip(realized_counts, simulated_count_samples)):
        samples = np.asarray(samples, dtype=np.int64)
        if samples.size == 0:
            continue
        support = int(samples.max()) + 2  # counts 0 .. max + 1
        hits = int((samples == realized).sum())
        prob = (hits + smoothing) / (samples.size + smoothing * support)
        out[w] = -np.log(prob)
    return LossSeries(out, rule_name)


@dataclass(frozen=True)
class SpaConfig:
    n_bootstrap: int = 1000
    mean_block_length: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n_bootstrap < 1 or self.mean_block_length < 1:
            raise ValueError("bootstrap settings must be positive")


@dataclass(frozen=True)
class SpaResult:
    benchmark: str
    statistic: float
    p_value: float
    mean_differentials: dict[str, float]
    excluded: tuple[str, ...]
    n_windows: int


def stationary_bootstrap_indices(n: int, size: int, mean_block: float,
                                 rng: np.random.Generator) -> np.ndarray:
    """Index matrix (size, n) of stationary-bootstrap resamples with
    geometric block lengths and wrap-around."""
    restart = rng.random((size, n)) < (1.0 / mean_block)
    restart[:, 0] = True
    starts = rng.integers(0, n, size=(size, n))
    pos = np.arange(n)[None, :]
    last_restart = np.maximum.accumulate(np.where(restart, pos, -1), axis=1)
    offset = pos - last_restart
    base = np.take_along_axis(starts, last_restart, axis=1)
    return (base + offset) % n


def spa_test(
    losses: Mapping[str, LossSeries | np.ndarray],
    benchmark_model: str,
    cfg: SpaConfig = SpaConfig(),
) -> SpaResult:
    """Bootstrap test of whether any rival forecasts better than the
    benchmark under the common loss.

    Loss differentials ``d_k = loss_benchmark - loss_k`` are studentized
    with their stationary-bootstrap variance; the statistic is the largest
    positive studentized mean.  The null distribution recenters each
    rival's resampled mean unless the rival is already clearly inferior.
    Windows unscored for any model are dropped jointly.  Zero-variance
    rivals are excluded and reported; the test degenerates when none
    remain.
    """
    series = {name: (ls.values if isinstance(ls, LossSeries) else np.asarray(ls, dtype=float))
              for name, ls in losses.items()}
    if benchmark_model not in series:
        raise KeyError(f"unknown benchmark {benchmark_model!r}")
    rivals = sorted(name for name in series if name != benchmark_model)
    if not rivals:
        raise ValueError("need at least one rival model")
    lengths = {len(v) for v in series.values()}
    if len(lengths) != 1:
        raise ValueError("loss series must be aligned to one grid")
    stacked = np.vstack([series[benchmark_model]] + [series[r] for r in rivals])
    keep = np.isfinite(stacked).all(axis=0)
    bench = stacked[0, keep]
    rival_losses = stacked[1:, keep]
    n = int(keep.sum())
    if n < 2:
        raise NoOverlap("fewer than two jointly scored windows")

    d = bench[None, :] - rival_losses  # (m, n): positive = rival better
    variances = d.var(axis=1, ddof=1)
    excluded = tuple(r for r, v in zip(rivals, variances) if v <= 0)
    alive = [k for k, v in enumerate(variances) if v > 0]
    mean_diffs = {r: float(d[k].mean()) for k, r in enumerate(rivals)}
    if not alive:
        raise DegenerateVariance(
            "every rival's loss differential has zero variance")
    d = d[alive]
    names = [rivals[k] for k in alive]
    m = len(names)

    rng = np.random.default_rng(cfg.seed)
    idx = stationary_bootstrap_indices(n, cfg.n_bootstrap, cfg.mean_block_length, rng)
    d_bar = d.mean(axis=1)                       # (m,)
    boot_means = d[:, idx].mean(axis=2)          # (m, B)
    omega2 = n * ((boot_means - d_bar[:, None]) ** 2).mean(axis=1)
    omega = np.sqrt(np.maximum(omega2, 1e-300))

    stat = float(max(0.0, (np.sqrt(n) * d_bar / omega).max()))
    # clearly-inferior rivals keep their mean under the null; the rest are
    # recentred onto the boundary of the null
    threshold = -omega / np.sqrt(n) * np.sqrt(2.0 * np.log(np.log(max(n, 3))))
    recenter = np.where(d_bar >= threshold, d_bar, 0.0)
    z = np.sqrt(n) * (boot_means - recenter[:, None]) / omega[:, None]  # (m, B)
    t_boot = np.maximum(z.max(axis=0), 0.0)
    p_value = float((t_boot >= stat).mean())
    return SpaResult(benchmark_model, stat, p_value, mean_diffs, excluded, n)


def spa_all_benchmarks(losses: Mapping[str, LossSeries | np.ndarray],
                       cfg: SpaConfig = SpaConfig()) -> dict[str, float]:
    """p-value of the test with each model in turn as the benchmark."""
    out = {}
    for name in sorted(losses):
        try:
            out[name] = spa_test(losses, name, cfg).p_value
        except (DegenerateVariance, NoOverlap):
            out[name] = float("nan")
    return out
