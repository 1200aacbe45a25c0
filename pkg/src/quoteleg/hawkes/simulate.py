"""Point-process simulation by thinning, seeded and exact.

A candidate arrival is drawn from an exponential clock at the current
total-intensity bound, then accepted with probability (true intensity /
bound) and attributed to a component by its intensity share.  Exponential
and sum-exponential kernels decay between events, so the current total
intensity is itself a valid bound; the discretized kernel may rise between
bins, so its bound uses the running maximum of the remaining bins.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    DiscretizedKernel,
    ExponentialKernel,
    HawkesModel,
    SumExpKernel,
    as_event_arrays,
    merge_events,
)


class ExplosionCap(Exception):
    """Simulation hit the event cap; the result is flagged, not truncated
    silently."""


@dataclass
class SimResult:
    times: list[np.ndarray]  # per-component, seconds in (0, horizon]
    capped: bool = False

    def counts(self) -> np.ndarray:
        return np.array([len(a) for a in self.times], dtype=np.int64)

    def total(self) -> int:
        return int(self.counts().sum())


def _empty_history(dim: int) -> list[np.ndarray]:
    return [np.empty(0) for _ in range(dim)]


def simulate_thinning(
    model: HawkesModel,
    history: Sequence | None,
    horizon: float,
    seed: int | np.random.Generator,
    *,
    max_events: int = 100_000,
) -> SimResult:
    """Draw one path of the model over ``(0, horizon]``.

    ``history`` holds per-component event times at or before 0 (seconds
    relative to the forecast start); they seed the initial intensity.
    Deterministic for a fixed seed.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    history = as_event_arrays(history) if history is not None else _empty_history(model.dim)
    if len(history) != model.dim:
        raise ValueError("history dimension does not match model")
    kernel = model.kernel
    if isinstance(kernel, ExponentialKernel):
        return _simulate_decaying(model, history, horizon, rng, max_events, _ExpState)
    if isinstance(kernel, SumExpKernel):
        return _simulate_decaying(model, history, horizon, rng, max_events, _SumExpState)
    return _simulate_discretized(model, history, horizon, rng, max_events)


class _ExpState:
    def __init__(self, model: HawkesModel, history):
        k: ExponentialKernel = model.kernel
        self.alpha, self.beta = k.alpha, k.beta
        D = model.dim
        self.S = np.zeros((D, D))
        for j, arr in enumerate(history):
            if len(arr):
                ages = -np.asarray(arr, dtype=float)  # times <= 0
                self.S[:, j] += np.exp(-np.multiply.outer(self.beta[:, j], ages)).sum(axis=1)

    def decay(self, dt: float) -> None:
        self.S *= np.exp(-self.beta * dt)

    def intensities(self, mu: np.ndarray) -> np.ndarray:
        return mu + (self.alpha * self.S).sum(axis=1)

    def add_event(self, d: int) -> None:
        self.S[:, d] += 1.0


class _SumExpState:
    def __init__(self, model: HawkesModel, history):
        k: SumExpKernel = model.kernel
        self.alphas, self.betas = k.alphas, k.betas
        U, D = len(k.betas), model.dim
        self.A = np.zeros((U, D))
        for j, arr in enumerate(history):
            if len(arr):
                ages = -np.asarray(arr, dtype=float)
                self.A[:, j] += np.exp(-np.multiply.outer(self.betas, ages)).sum(axis=1)

    def decay(self, dt: float) -> None:
        self.A *= np.exp(-self.betas * dt)[:, None]

    def intensities(self, mu: np.ndarray) -> np.ndarray:
        return mu + np.einsum("udj,uj->d", self.alphas, self.A)

    def add_event(self, d: int) -> None:
        self.A[:, d] += 1.0


def _simulate_decaying(model, history, horizon, rng, max_events, state_cls) -> SimResult:
    state = state_cls(model, history)
    mu = model.mu
    out: list[list[float]] = [[] for _ in range(model.dim)]
    t = 0.0
    n = 0
    capped = False
    while True:
        bound = float(state.intensities(mu).sum())
        if bound <= 0:
            break
        w = rng.exponential(1.0 / bound)
        if t + w > horizon:
            break
        state.decay(w)
        t += w
        lam = state.intensities(mu)
        total = float(lam.sum())
        u = rng.uniform(0.0, bound)
        if u <= total:
            d = int(np.searchsorted(np.cumsum(lam), u))
            d = min(d, model.dim - 1)
            out[d].append(t)
            state.add_event(d)
            n += 1
            if n >= max_events:
                capped = True
                break
    return SimResult([np.asarray(a) for a in out], capped=capped)


def _simulate_discretized(model, history, horizon, rng, max_events) -> SimResult:
    kernel: DiscretizedKernel = model.kernel
    mu = model.mu
    D = model.dim
    width = kernel.bin_width
    bins = kernel.bins
    # tail_max[i, j, b] = max over bins >= b, a valid bound on the future
    # contribution of a source-j event currently in bin b
    tail_max = np.maximum.accumulate(kernel.values[:, :, ::-1], axis=2)[:, :, ::-1]
    tail_max_total = tail_max.sum(axis=0)  # (D, bins): summed over targets

    ht, hd = merge_events(history)
    recent_t = [float(x) for x in ht]
    recent_d = [int(x) for x in hd]
    out: list[list[float]] = [[] for _ in range(D)]
    t = 0.0
    n = 0
    capped = False

    def prune(now: float) -> None:
        while recent_t and now - recent_t[0] >= kernel.support:
            recent_t.pop(0)
            recent_d.pop(0)

    def lam_at(now: float) -> np.ndarray:
        lam = mu.copy()
        for te, de in zip(recent_t, recent_d):
            age = now - te
            if 0 <= age < kernel.support:
                b = min(int(age / width), bins - 1)
                lam += kernel.values[:, de, b]
        return lam

    while True:
        prune(t)
        bound = float(mu.sum())
        for te, de in zip(recent_t, recent_d):
            age = t - te
            if age < kernel.support:
                b = min(int(age / width), bins - 1) if age >= 0 else 0
                bound += float(tail_max_total[de, b])
        if bound <= 0:
            break
        w = rng.exponential(1.0 / bound)
        if t + w > horizon:
            break
        t += w
        prune(t)
        lam = lam_at(t)
        total = float(lam.sum())
        u = rng.uniform(0.0, bound)
        if u <= total:
            d = int(np.searchsorted(np.cumsum(lam), u))
            d = min(d, D - 1)
            out[d].append(t)
            recent_t.append(t)
            recent_d.append(d)
            n += 1
            if n >= max_events:
                capped = True
                break
    return SimResult([np.asarray(a) for a in out], capped=capped)


def simulate_counts(
    model: HawkesModel,
    history: Sequence | None,
    horizon: float,
    seeds: Sequence[int],
    *,
    dims: Sequence[int] | None = None,
    max_events: int = 100_000,
) -> np.ndarray:
    """Event counts over the horizon for each seed, summed over ``dims``
    (all components when omitted)."""
    sel = list(range(model.dim)) if dims is None else list(dims)
    out = np.zeros(len(seeds), dtype=np.int64)
    for k, seed in enumerate(seeds):
        sim = simulate_thinning(model, history, horizon, int(seed),
                                max_events=max_events)
        out[k] = sum(len(sim.times[d]) for d in sel)
    return out


def time_rescaling_residuals(model: HawkesModel, events: Sequence,
                             duration: float) -> list[np.ndarray]:
    """Per-component compensator increments between that component's
    events; unit-exponential under the true model.

    Supported for the exponential kernel, which is what the calibration
    checks use.
    """
    if not isinstance(model.kernel, ExponentialKernel):
        raise NotImplementedError("residuals implemented for exponential kernels")
    alpha, beta = model.kernel.alpha, model.kernel.beta
    mu = model.mu
    D = model.dim
    events = as_event_arrays(events)
    t, d = merge_events(events)
    S = np.zeros((D, D))
    comp = np.zeros(D)  # accumulated compensator per component
    marks: list[list[float]] = [[] for _ in range(D)]
    t_prev = 0.0
    for k in range(len(t)):
        dt = t[k] - t_prev
        if dt > 0:
            decay = np.exp(-beta * dt)
            comp += mu * dt + ((alpha / beta) * S * (1.0 - decay)).sum(axis=1)
            S = decay * S
        marks[d[k]].append(comp[d[k]])
        S[:, d[k]] += 1.0
        t_prev = t[k]
    residuals = []
    for i in range(D):
        lam_marks = np.asarray(marks[i])
        residuals.append(np.diff(lam_marks, prepend=0.0) if len(lam_marks)
                         else np.empty(0))
    return residuals
