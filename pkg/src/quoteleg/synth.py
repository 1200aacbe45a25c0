"""Synthetic two-contract tick markets with controllable event flow.

Touch-impacting events (trades, top-level cancels, price-down modifies)
arrive from per-contract self-exciting generators; depth orders arrive as
Poisson flow.  Every arrival is realized as a book-consistent row in the
standard tick-file layout, so the output replays cleanly through the
parser and book builder.  Ladder shapes on the liquidity-factor sides
(current-month bid, next-month ask) can follow a schedule, and
passive-aggressive trade pairs can be planted per oracle window to pin
the hindsight-optimal decision.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .benchmark import MISSING
from .hawkes.model import ExponentialKernel, HawkesModel, LABELS, REF_INDEX
from .hawkes.simulate import simulate_thinning
from .tickstore import (
    Aggressor,
    EventKind,
    Side,
    TickEvent,
    WindowGrid,
    write_tick_file,
)

NANOS_PER_SEC = 1_000_000_000


class InfeasiblePlan(Exception):
    """An oracle window too short to host the required trade pair."""


@dataclass(frozen=True)
class FlowConfig:
    """Arrival intensities for one contract."""

    ref_rates: dict[str, float]      # label -> baseline events/s
    self_excitation: float = 0.3     # kernel mass per touch-impacting type
    decay: float = 20.0              # 1/s
    depth_new_rate: float = 20.0     # per side, events/s

    def model(self) -> HawkesModel:
        mu = np.array([self.ref_rates.get(lbl, 0.0) for lbl in LABELS])
        D = len(LABELS)
        beta = np.full((D, D), self.decay)
        alpha = np.diag(np.full(D, self.self_excitation * self.decay))
        return HawkesModel(mu, ExponentialKernel(alpha, beta), REF_INDEX)


@dataclass(frozen=True)
class LadderShape:
    """Gap pattern (tick multiples between successive levels) and level
    quantity for one book side."""

    gaps: tuple[int, ...] = (1, 1, 1, 1)
    qty: int = 50


@dataclass(frozen=True)
class SynthConfig:
    duration_s: float
    seed: int
    start_nanos: int = 1_700_000_000_000_000_000
    symbol_c: str = "SYNF_C"
    symbol_n: str = "SYNF_N"
    anchor_bid_c: int = 1_700_000  # paise
    anchor_ask_c: int = 1_700_500
    anchor_bid_n: int = 1_706_000
    anchor_ask_n: int = 1_706_500
    flow_c: FlowConfig = field(default_factory=lambda: FlowConfig(
        {"T_A": 2.0, "T_B": 2.0, "C_A": 4.0, "C_B": 4.0, "PDM_A": 2.0, "PDM_B": 2.0}))
    flow_n: FlowConfig = field(default_factory=lambda: FlowConfig(
        {"T_A": 2.0, "T_B": 2.0, "C_A": 4.0, "C_B": 4.0, "PDM_A": 2.0, "PDM_B": 2.0}))
    levels: int = 5
    tick_paise: int = 5
    base_qty: int = 50
    trade_qty: int = 10
    shape_default: LadderShape = LadderShape()
    # (start_s, end_s, favored): reshape the current-month bid and
    # next-month ask ladders so the favored contract carries the flatter,
    # lower-factor ladder during the segment
    clf_schedule: tuple[tuple[float, float, str], ...] = ()
    clf_tight: LadderShape = LadderShape(gaps=(1, 1, 1, 1), qty=200)
    clf_wide: LadderShape = LadderShape(gaps=(8, 8, 8, 8), qty=10)
    reshape_every_s: float = 1.0
    touch_band_ticks: int = 10
    sim_max_events: int = 2_000_000

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if not self.anchor_bid_c < self.anchor_ask_c:
            raise ValueError("current-month anchors crossed")
        if not self.anchor_bid_n < self.anchor_ask_n:
            raise ValueError("next-month anchors crossed")
        for fc in (self.flow_c, self.flow_n):
            if fc.self_excitation >= 1.0:
                raise ValueError("generator must be stable (branching < 1)")


@dataclass
class GeneratedMarket:
    path_c: Path
    path_n: Path
    symbol_c: str
    symbol_n: str
    start_nanos: int
    end_nanos: int
    planned_label_counts: dict[str, dict[str, int]]
    oracle_grid: WindowGrid | None = None
    planted: np.ndarray | None = None


class _SideState:
    """One book side of the synthetic market; emits rows and mirrors the
    resulting ladder so every row is consistent with prior rows.

    Entries are per-order (several may share a price) so each emitted
    modify or cancel refers to an order whose live price and quantity the
    replay side agrees on.
    """

    def __init__(self, side: Side, anchor: int, shape: LadderShape,
                 tick: int, levels: int, next_oid):
        self.side = side
        self.anchor = anchor
        self.tick = tick
        self.levels = levels
        self.shape = shape
        self.next_oid = next_oid
        self.ladder: list[list[int]] = []  # [price, qty, oid, seq], best first
        self.direction = -1 if side is Side.BID else 1  # worse-price step
        self._seq = 0

    def target_prices(self, touch: int) -> list[int]:
        prices = [touch]
        for gap in self.shape.gaps:
            prices.append(prices[-1] + self.direction * gap * self.tick)
        while len(prices) < self.levels:
            prices.append(prices[-1] + self.direction * self.tick)
        return prices[: self.levels]

    def touch(self) -> list[int] | None:
        return self.ladder[0] if self.ladder else None

    def touch_group(self) -> list[list[int]]:
        if not self.ladder:
            return []
        best = self.ladder[0][0]
        return [e for e in self.ladder if e[0] == best]

    def level_count(self) -> int:
        return len({e[0] for e in self.ladder})

    def worst_price(self) -> int:
        return self.ladder[-1][0]

    def free_price_behind(self, price: int) -> int:
        """First unoccupied tick slot at or beyond ``price`` away from
        the touch."""
        occupied = {e[0] for e in self.ladder}
        while price in occupied:
            price += self.direction * self.tick
        return price

    def _insert(self, price: int, qty: int, oid: int) -> None:
        self.ladder.append([price, qty, oid, self._seq])
        self._seq += 1
        self.ladder.sort(key=lambda e: (self.direction * e[0], e[3]))


def _mk_event(ts, symbol, kind, side, price, qty, oid1, oid2=None, agg=None):
    return TickEvent(ts, symbol, kind, side, price, qty, oid1, oid2, agg)


class _SynthContract:
    def __init__(self, cfg: SynthConfig, symbol: str, anchor_bid: int,
                 anchor_ask: int, oid_start: int):
        self.cfg = cfg
        self.symbol = symbol
        self._oid = oid_start
        self.bid = _SideState(Side.BID, anchor_bid, cfg.shape_default,
                              cfg.tick_paise, cfg.levels, self._take_oid)
        self.ask = _SideState(Side.ASK, anchor_ask, cfg.shape_default,
                              cfg.tick_paise, cfg.levels, self._take_oid)
        self.rows: list[TickEvent] = []
        self.planned: dict[str, int] = {}
        self._ts = 0

    def _take_oid(self) -> int:
        self._oid += 1
        return self._oid

    def _stamp(self, ts: int) -> int:
        # strictly increasing timestamps within one file
        self._ts = max(ts, self._ts + 1)
        return self._ts

    def _emit(self, ts, kind, side, price, qty, oid1, oid2=None, agg=None):
        side_val = Side.UNKNOWN if kind is EventKind.TRADE else side
        self.rows.append(_mk_event(self._stamp(ts), self.symbol, kind,
                                   side_val, price, qty, oid1, oid2, agg))

    def _state(self, side: Side) -> _SideState:
        return self.bid if side is Side.BID else self.ask

    def seed_ladders(self, ts: int) -> None:
        for state in (self.bid, self.ask):
            for price in state.target_prices(state.anchor):
                oid = self._take_oid()
                qty = state.shape.qty
                state._insert(price, qty, oid)
                self._emit(ts, EventKind.NEW, state.side, price, qty, oid)

    def replenish(self, ts: int, side: Side) -> None:
        """Restore the touch toward its anchor and keep the ladder deep."""
        state = self._state(side)
        touch = state.touch()
        drift_limit = self.cfg.touch_band_ticks * state.tick
        if touch is None or abs(touch[0] - state.anchor) > drift_limit \
                or (touch[0] - state.anchor) * state.direction > 0:
            oid = self._take_oid()
            qty = state.shape.qty
            state._insert(state.anchor, qty, oid)
            self._emit(ts, EventKind.NEW, side, state.anchor, qty, oid)
        elif sum(e[1] for e in state.touch_group()) < max(2, state.shape.qty // 4):
            oid = self._take_oid()
            add = state.shape.qty
            state._insert(touch[0], add, oid)
            self._emit(ts, EventKind.NEW, side, touch[0], add, oid)
        while state.level_count() < state.levels:
            price = state.free_price_behind(state.worst_price()
                                            + state.direction * state.tick)
            oid = self._take_oid()
            qty = state.shape.qty
            state._insert(price, qty, oid)
            self._emit(ts, EventKind.NEW, side, price, qty, oid)

    def trade_at_touch(self, ts: int, side: Side, agg: Aggressor,
                       qty: int | None = None) -> int | None:
        """Print a trade consuming the first order at the touch; returns
        the price or None if the side is empty."""
        state = self._state(side)
        touch = state.touch()
        if touch is None:
            return None
        take = min(qty or self.cfg.trade_qty, touch[1])
        price = touch[0]
        self._emit(ts, EventKind.TRADE, side, price, take,
                   self._take_oid(), touch[2], agg)
        touch[1] -= take
        if touch[1] <= 0:
            state.ladder.remove(touch)
        self.replenish(ts, side)
        return price

    def cancel_at_touch(self, ts: int, side: Side) -> bool:
        state = self._state(side)
        touch = state.touch()
        if touch is None:
            return False
        sole_level = state.level_count() <= 1
        take = max(1, touch[1] // 2) if sole_level else touch[1]
        if take >= touch[1] and sole_level:
            return False
        self._emit(ts, EventKind.CANCEL, side, touch[0], take, touch[2])
        touch[1] -= take
        if touch[1] <= 0:
            state.ladder.remove(touch)
        self.replenish(ts, side)
        return True

    def pdm_at_touch(self, ts: int, side: Side) -> bool:
        """Re-price every order resting at the touch one step away from
        the mid (to the first free tick), worsening the side's best."""
        state = self._state(side)
        group = state.touch_group()
        if not group or state.level_count() < 2:
            return False
        new_price = state.free_price_behind(group[0][0]
                                            + state.direction * state.tick)
        for entry in group:
            price, qty, oid = entry[0], entry[1], entry[2]
            state.ladder.remove(entry)
            state._insert(new_price, qty, oid)
            self._emit(ts, EventKind.MODIFY, side, new_price, qty, oid)
        self.replenish(ts, side)
        return True

    def depth_new(self, ts: int, side: Side, rng: np.random.Generator) -> None:
        state = self._state(side)
        if not state.ladder:
            self.replenish(ts, side)
            return
        price = state.free_price_behind(
            state.worst_price()
            + state.direction * state.tick * int(rng.integers(1, 4)))
        qty = self.cfg.base_qty
        oid = self._take_oid()
        state._insert(price, qty, oid)
        self._emit(ts, EventKind.NEW, side, price, qty, oid)

    def reshape(self, ts: int, side: Side, shape: LadderShape) -> None:
        """Re-lay everything behind the touch to a target gap pattern."""
        state = self._state(side)
        state.shape = shape
        if not state.ladder:
            self.replenish(ts, side)
        group = state.touch_group()
        for entry in list(state.ladder):
            if entry in group:
                continue
            self._emit(ts, EventKind.CANCEL, side, entry[0], entry[1], entry[2])
            state.ladder.remove(entry)
        group_qty = sum(e[1] for e in group)
        touch_price = group[0][0]
        if group_qty < shape.qty:
            oid = self._take_oid()
            add = shape.qty - group_qty
            state._insert(touch_price, add, oid)
            self._emit(ts, EventKind.NEW, side, touch_price, add, oid)
        elif group_qty > shape.qty:
            # trim the touch back toward the shape, keeping at least one lot
            excess = group_qty - shape.qty
            for entry in group:
                if excess <= 0:
                    break
                cut = min(excess, entry[1] - (1 if entry is group[0] else 0))
                if cut <= 0:
                    continue
                self._emit(ts, EventKind.CANCEL, side, entry[0], cut, entry[2])
                entry[1] -= cut
                excess -= cut
                if entry[1] <= 0:
                    state.ladder.remove(entry)
        for price in state.target_prices(touch_price)[1:]:
            oid = self._take_oid()
            state._insert(price, shape.qty, oid)
            self._emit(ts, EventKind.NEW, side, price, shape.qty, oid)


def _poisson_times(rate: float, duration: float, rng: np.random.Generator) -> np.ndarray:
    if rate <= 0:
        return np.empty(0)
    n = rng.poisson(rate * duration)
    return np.sort(rng.uniform(0.0, duration, size=n))


_LABEL_ACTION = {
    "T_A": (Side.ASK, "trade", Aggressor.BUY),
    "T_B": (Side.BID, "trade", Aggressor.SELL),
    "C_A": (Side.ASK, "cancel", None),
    "C_B": (Side.BID, "cancel", None),
    "PDM_A": (Side.ASK, "pdm", None),
    "PDM_B": (Side.BID, "pdm", None),
}


def _organic_actions(cfg: SynthConfig, tag: str, flow: FlowConfig,
                     ss: np.random.SeedSequence) -> list[tuple[float, str, str]]:
    """(time_s, contract, action) entries for one contract's organic flow."""
    seeds = ss.spawn(2)
    sim = simulate_thinning(flow.model(), None, cfg.duration_s,
                            np.random.default_rng(seeds[0]),
                            max_events=cfg.sim_max_events)
    actions: list[tuple[float, str, str]] = []
    for lbl, times in zip(LABELS, sim.times):
        actions.extend((float(t), tag, lbl) for t in times)
    rng_news = np.random.default_rng(seeds[1])
    for side_tag in ("NEW_B", "NEW_A"):
        for t in _poisson_times(flow.depth_new_rate, cfg.duration_s, rng_news):
            actions.append((float(t), tag, side_tag))
    return actions


def _schedule_actions(cfg: SynthConfig, ss_c, ss_n, oracle_grid, planted,
                      gap_nanos: int, offset_nanos: int):
    """One time-ordered queue over organic flow, ladder reshapes, and
    planted trade pairs; state must evolve strictly in time order."""
    queue: list[tuple[float, int, str, str]] = []
    seq = 0

    def push(t_s: float, contract: str, action: str):
        nonlocal seq
        queue.append((t_s, seq, contract, action))
        seq += 1

    for t_s, tag, action in _organic_actions(cfg, "c", cfg.flow_c, ss_c):
        push(t_s, tag, action)
    for t_s, tag, action in _organic_actions(cfg, "n", cfg.flow_n, ss_n):
        push(t_s, tag, action)

    for seg_start, seg_end, favored in cfg.clf_schedule:
        if favored not in ("c", "n"):
            raise ValueError(f"bad favored contract {favored!r}")
        t = seg_start
        while t < seg_end and t < cfg.duration_s:
            push(t, "c", "RESHAPE_TIGHT" if favored == "c" else "RESHAPE_WIDE")
            push(t, "n", "RESHAPE_TIGHT" if favored == "n" else "RESHAPE_WIDE")
            t += cfg.reshape_every_s

    if planted is not None:
        if oracle_grid.width_nanos < offset_nanos + gap_nanos + 1:
            raise InfeasiblePlan(
                f"oracle window {oracle_grid.width_nanos} ns cannot host a "
                f"pair (needs {offset_nanos + gap_nanos + 1} ns)")
        for k, (w1, _) in enumerate(oracle_grid):
            decision = planted[k]
            if decision == MISSING:
                continue
            t1 = (w1 + offset_nanos - cfg.start_nanos) / NANOS_PER_SEC
            t2 = (w1 + offset_nanos + gap_nanos - cfg.start_nanos) / NANOS_PER_SEC
            if decision == 1:
                # current month passively sold first, next month bought after
                push(t1, "c", "PLANT_T_A")
                push(t2, "n", "PLANT_T_A")
            else:
                push(t1, "n", "PLANT_T_B")
                push(t2, "c", "PLANT_T_B")

    queue.sort(key=lambda item: (item[0], item[1]))
    return queue


def _apply_action(contract: _SynthContract, ts: int, action: str,
                  cfg: SynthConfig, rng: np.random.Generator) -> None:
    if action.startswith("NEW_"):
        side = Side.BID if action.endswith("B") else Side.ASK
        contract.depth_new(ts, side, rng)
        return
    if action == "RESHAPE_TIGHT" or action == "RESHAPE_WIDE":
        shape = cfg.clf_tight if action == "RESHAPE_TIGHT" else cfg.clf_wide
        side = Side.BID if contract.symbol == cfg.symbol_c else Side.ASK
        contract.reshape(ts, side, shape)
        return
    if action.startswith("PLANT_"):
        label = action.removeprefix("PLANT_")
        side, _, agg = _LABEL_ACTION[label]
        contract.trade_at_touch(ts, side, agg)
        return
    side, verb, agg = _LABEL_ACTION[action]
    if verb == "trade":
        done = contract.trade_at_touch(ts, side, agg) is not None
    elif verb == "cancel":
        done = contract.cancel_at_touch(ts, side)
    else:
        done = contract.pdm_at_touch(ts, side)
    if done:
        contract.planned[action] = contract.planned.get(action, 0) + 1


def _build(cfg: SynthConfig, out_dir, *, oracle_grid: WindowGrid | None = None,
           planted: np.ndarray | None = None,
           pair_gap_nanos: int = 2_000_000,
           pair_offset_nanos: int = 1_000_000) -> GeneratedMarket:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ss = np.random.SeedSequence(cfg.seed)
    ss_c, ss_n, ss_apply = ss.spawn(3)

    con_c = _SynthContract(cfg, cfg.symbol_c, cfg.anchor_bid_c,
                           cfg.anchor_ask_c, 1_000_000)
    con_n = _SynthContract(cfg, cfg.symbol_n, cfg.anchor_bid_n,
                           cfg.anchor_ask_n, 2_000_000)
    t0 = cfg.start_nanos
    con_c.seed_ladders(t0)
    con_n.seed_ladders(t0)

    queue = _schedule_actions(cfg, ss_c, ss_n, oracle_grid, planted,
                              pair_gap_nanos, pair_offset_nanos)
    rng_apply = np.random.default_rng(ss_apply)
    contracts = {"c": con_c, "n": con_n}
    for t_s, _, tag, action in queue:
        ts = t0 + int(t_s * NANOS_PER_SEC)
        _apply_action(contracts[tag], ts, action, cfg, rng_apply)

    end = t0 + int(cfg.duration_s * NANOS_PER_SEC)
    paths = {}
    for name, con in (("c", con_c), ("n", con_n)):
        path = out_dir / f"ticks_{con.symbol}.csv"
        write_tick_file(con.rows, path)
        paths[name] = path

    return GeneratedMarket(
        paths["c"], paths["n"], cfg.symbol_c, cfg.symbol_n, t0, end,
        {"c": dict(con_c.planned), "n": dict(con_n.planned)},
        oracle_grid=oracle_grid, planted=planted,
    )


def generate_market(cfg: SynthConfig, out_dir) -> GeneratedMarket:
    """Write one synthetic market (two tick files) and report what was
    planned; deterministic for a fixed seed."""
    return _build(cfg, out_dir)


def generate_labeled_pairs(
    cfg: SynthConfig,
    planted_decisions,
    out_dir,
    *,
    oracle_window_nanos: int = 1_000_000_000,
    pair_gap_nanos: int = 2_000_000,
    pair_offset_nanos: int = 1_000_000,
) -> GeneratedMarket:
    """Market whose per-window hindsight-optimal decisions are planted.

    One rollover trade pair is injected per oracle window (entries of
    ``None`` leave the window empty); the expected oracle series comes
    back with the market for equivalence testing.
    """
    n = len(planted_decisions)
    planted = np.array([MISSING if d is None else int(d)
                        for d in planted_decisions], dtype=np.int8)
    start = cfg.start_nanos
    grid = WindowGrid(start, start + n * oracle_window_nanos,
                      oracle_window_nanos, oracle_window_nanos)
    if len(grid) != n:
        raise InfeasiblePlan(
            f"{n} decisions cannot fill {len(grid)} oracle windows")
    if n * oracle_window_nanos > cfg.duration_s * NANOS_PER_SEC:
        raise InfeasiblePlan("planted windows overrun the market duration")
    # organic prints would pair up on their own and could undercut the
    # planted minimum-spread pair, so labeled markets carry no organic
    # trades; cancels, price-down modifies, and depth flow remain
    cfg = replace(cfg,
                  flow_c=_without_trades(cfg.flow_c),
                  flow_n=_without_trades(cfg.flow_n))
    return _build(cfg, out_dir, oracle_grid=grid, planted=planted,
                  pair_gap_nanos=pair_gap_nanos,
                  pair_offset_nanos=pair_offset_nanos)


def _without_trades(flow: FlowConfig) -> FlowConfig:
    rates = {lbl: r for lbl, r in flow.ref_rates.items()
             if lbl not in ("T_A", "T_B")}
    return replace(flow, ref_rates=rates)
