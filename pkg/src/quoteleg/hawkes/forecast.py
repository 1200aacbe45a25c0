"""Arrival-ratio forecasts and the flow-based reference-leg decision.

For each evaluation window two models per contract are simulated forward
over the horizon: one fitted on touch-impacting events only, one on the
full event flow.  The arrival ratio is the mean simulated touch-impacting
count over the mean simulated total count on the decision-relevant book
side, and the next month is chosen iff the current month's ask-side ratio
is at least the next month's bid-side ratio.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..tickstore import ClassifiedEvent, EventKind, Label, Side, Aggressor
from .model import EventTypeIndex, HawkesModel, REF_INDEX, SIDE_INDEX
from .simulate import simulate_counts


class UndefinedRatio(Exception):
    """An arrival ratio with zero simulated total count."""


NANOS_PER_SEC = 1_000_000_000


@dataclass(frozen=True)
class HawkesFitConfig:
    lookback_nanos: int = 1_000_000_000
    step_nanos: int = 10_000_000
    horizon_nanos: int = 10_000_000
    n_sims: int = 200
    kernel_kind: str = "exp"  # 'exp', 'sumexp', or 'em'
    em_bins: int = 20
    em_support_nanos: int = 100_000_000
    max_iters: int = 200
    tolerance: float = 1e-8
    sumexp_betas: tuple[float, ...] = (10.0, 100.0, 1000.0)
    sim_max_events: int = 100_000
    ratio_of_means: bool = True  # else: mean of per-simulation ratios

    def __post_init__(self):
        for name in ("lookback_nanos", "step_nanos", "horizon_nanos",
                     "n_sims", "em_bins", "em_support_nanos", "max_iters"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.em_support_nanos > self.lookback_nanos:
            raise ValueError("EM support cannot exceed the fit lookback")
        if self.kernel_kind not in ("exp", "sumexp", "em"):
            raise ValueError(f"bad kernel kind {self.kernel_kind!r}")

    @property
    def horizon_secs(self) -> float:
        return self.horizon_nanos / NANOS_PER_SEC

    @property
    def lookback_secs(self) -> float:
        return self.lookback_nanos / NANOS_PER_SEC


@dataclass(frozen=True)
class ArrivalForecast:
    w1: int
    w2: int
    contract: str  # 'c' or 'n'
    side: str      # 'A' or 'B'
    n_ref: float
    n_all: float
    rho: float | None  # None when undefined (zero simulated total)
    exceeds_unity: bool = False


def ref_event_times(
    classified: Sequence[ClassifiedEvent],
    t0_nanos: int,
    t1_nanos: int,
    index: EventTypeIndex = REF_INDEX,
) -> list[np.ndarray]:
    """Touch-impacting event times per component, seconds since ``t0``;
    only events in ``[t0, t1)`` are taken."""
    buckets: list[list[float]] = [[] for _ in index.entries]
    positions = {lbl: k for k, lbl in enumerate(index.entries)}
    for ev in classified:
        if not t0_nanos <= ev.ts_nanos < t1_nanos:
            continue
        if ev.label is Label.OTHER:
            continue
        pos = positions.get(ev.label.value)
        if pos is not None:
            buckets[pos].append((ev.ts_nanos - t0_nanos) / NANOS_PER_SEC)
    return [np.asarray(b) for b in buckets]


def event_side(ev) -> str | None:
    """Book side a raw event acts on: trades rest on the side the
    aggressor consumed."""
    base = ev.base if isinstance(ev, ClassifiedEvent) else ev
    if base.kind is EventKind.TRADE:
        return "A" if base.aggressor is Aggressor.BUY else "B"
    if base.side is Side.BID:
        return "B"
    if base.side is Side.ASK:
        return "A"
    return None


def all_event_times(
    events: Sequence,
    t0_nanos: int,
    t1_nanos: int,
    index: EventTypeIndex = SIDE_INDEX,
) -> list[np.ndarray]:
    """All event times bucketed by book side, seconds since ``t0``."""
    buckets: list[list[float]] = [[] for _ in index.entries]
    side_pos = {lbl.rsplit("_", 1)[-1]: k for k, lbl in enumerate(index.entries)}
    for ev in events:
        ts = ev.ts_nanos
        if not t0_nanos <= ts < t1_nanos:
            continue
        side = event_side(ev)
        if side is None:
            continue
        pos = side_pos.get(side)
        if pos is not None:
            buckets[pos].append((ts - t0_nanos) / NANOS_PER_SEC)
    return [np.asarray(b) for b in buckets]


def shift_to_horizon_frame(history: Sequence[np.ndarray],
                           lookback_secs: float) -> list[np.ndarray]:
    """Re-anchor fit-frame times (0..lookback] so the forecast start is 0."""
    return [np.asarray(a, dtype=float) - lookback_secs for a in history]


def arrival_ratio(
    window: tuple[int, int],
    contract_side: tuple[str, str],
    model_ref: HawkesModel,
    model_all: HawkesModel,
    history_ref: Sequence[np.ndarray],
    history_all: Sequence[np.ndarray],
    config: HawkesFitConfig,
    seed: int,
) -> ArrivalForecast:
    """Simulate both models ``n_sims`` times over the horizon and form the
    ratio of mean touch-impacting count to mean total count on the
    relevant side.

    Histories are in the horizon frame (times at or before 0).  The same
    per-simulation seed schedule drives both models, so identical models
    give a ratio of exactly 1.  Ratios above 1 are possible because the
    two counts come from different fitted models; they are flagged, not
    clamped.
    """
    contract, side = contract_side
    seeds = np.random.SeedSequence(seed).generate_state(config.n_sims)
    ref_dims = model_ref.index.dims_for_side(side)
    all_dims = model_all.index.dims_for_side(side)
    horizon = config.horizon_secs
    ref_counts = simulate_counts(model_ref, history_ref, horizon, seeds,
                                 dims=ref_dims, max_events=config.sim_max_events)
    all_counts = simulate_counts(model_all, history_all, horizon, seeds,
                                 dims=all_dims, max_events=config.sim_max_events)
    n_ref = float(ref_counts.mean())
    n_all = float(all_counts.mean())
    if config.ratio_of_means:
        rho = None if n_all == 0 else n_ref / n_all
    else:
        defined = all_counts > 0
        rho = None if not defined.any() else float(
            (ref_counts[defined] / all_counts[defined]).mean())
    return ArrivalForecast(window[0], window[1], contract, side,
                           n_ref, n_all, rho,
                           exceeds_unity=rho is not None and rho > 1.0)


def hawkes_decision(rho_ca: float | None, rho_nb: float | None) -> int:
    """1 (quote off the next month) iff the current month's ask-side ratio
    is at least the next month's bid-side ratio; ties pick the next month."""
    if rho_ca is None or rho_nb is None:
        raise UndefinedRatio("arrival ratio undefined for at least one side")
    return 1 if rho_ca >= rho_nb else 0


def kernel_norms(model: HawkesModel) -> np.ndarray:
    """Kernel mass matrix: integral of each pairwise excitation kernel."""
    return model.branching_matrix()
