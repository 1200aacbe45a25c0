"""Multivariate Hawkes model state: kernels, likelihoods, norms.

The conditional intensity of component ``i`` is

    lambda_i(t) = mu_i + sum_j  sum_{t_l^j < t}  phi_ij(t - t_l^j)

with three kernel families: exponential ``alpha_ij * exp(-beta_ij * t)``,
a sum of exponentials with shared fixed decays, and a piecewise-constant
(discretized) kernel on a uniform grid.  All times are in seconds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class HawkesError(Exception):
    pass


class NoEvents(HawkesError):
    pass


class Diverged(HawkesError):
    """Likelihood became non-finite during or after optimization."""


LABELS: tuple[str, ...] = ("T_A", "T_B", "C_A", "C_B", "PDM_A", "PDM_B")


def side_of_label(label: str) -> str:
    """'A' or 'B' by the trailing side token of a component label."""
    token = label.rsplit("_", 1)[-1]
    if token not in ("A", "B"):
        raise ValueError(f"label {label!r} carries no side token")
    return token


@dataclass(frozen=True)
class EventTypeIndex:
    """Ordered component labels of one model; positions are stable."""

    entries: tuple[str, ...] = LABELS

    def __post_init__(self):
        if len(self.entries) == 0:
            raise ValueError("index needs at least one entry")
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("duplicate labels")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def position(self, label: str) -> int:
        return self.entries.index(label)

    def dims_for_side(self, side: str) -> list[int]:
        return [i for i, lbl in enumerate(self.entries)
                if side_of_label(lbl) == side]


REF_INDEX = EventTypeIndex()
SIDE_INDEX = EventTypeIndex(("ALL_B", "ALL_A"))


@dataclass(frozen=True)
class ExponentialKernel:
    alpha: np.ndarray  # (D, D), >= 0
    beta: np.ndarray   # (D, D), > 0
    kind: str = field(default="exp", init=False)

    def norms(self) -> np.ndarray:
        return self.alpha / self.beta

    def value(self, dt: float) -> np.ndarray:
        return self.alpha * np.exp(-self.beta * dt)


@dataclass(frozen=True)
class SumExpKernel:
    alphas: np.ndarray  # (U, D, D), >= 0
    betas: np.ndarray   # (U,), > 0, shared across pairs
    kind: str = field(default="sumexp", init=False)

    def norms(self) -> np.ndarray:
        return (self.alphas / self.betas[:, None, None]).sum(axis=0)

    def value(self, dt: float) -> np.ndarray:
        return (self.alphas * np.exp(-self.betas * dt)[:, None, None]).sum(axis=0)


@dataclass(frozen=True)
class DiscretizedKernel:
    support: float       # seconds
    values: np.ndarray   # (D, D, B), >= 0

    kind: str = field(default="discretized", init=False)

    @property
    def bins(self) -> int:
        return self.values.shape[2]

    @property
    def bin_width(self) -> float:
        return self.support / self.bins

    def norms(self) -> np.ndarray:
        return self.values.sum(axis=2) * self.bin_width

    def value(self, dt: float) -> np.ndarray:
        if dt < 0 or dt >= self.support:
            return np.zeros(self.values.shape[:2])
        b = min(int(dt / self.bin_width), self.bins - 1)
        return self.values[:, :, b]


Kernel = ExponentialKernel | SumExpKernel | DiscretizedKernel


@dataclass(frozen=True)
class HawkesModel:
    mu: np.ndarray
    kernel: Kernel
    index: EventTypeIndex = REF_INDEX
    converged: bool = True
    n_iters: int = 0
    log_lik: float = float("nan")

    @property
    def dim(self) -> int:
        return len(self.mu)

    def branching_matrix(self) -> np.ndarray:
        return self.kernel.norms()

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.branching_matrix()))))

    @property
    def stable(self) -> bool:
        return self.spectral_radius() < 1.0


def as_event_arrays(events: Sequence[np.ndarray | Sequence[float]],
                    ) -> list[np.ndarray]:
    return [np.asarray(a, dtype=float) for a in events]


def merge_events(events: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Merge per-component time arrays into sorted ``(times, components)``."""
    ts = np.concatenate([np.asarray(a, dtype=float) for a in events]) \
        if events else np.empty(0)
    ds = np.concatenate([np.full(len(a), d, dtype=np.int64)
                         for d, a in enumerate(events)]) \
        if events else np.empty(0, dtype=np.int64)
    order = np.argsort(ts, kind="stable")
    return ts[order], ds[order]


def total_count(events: Sequence[np.ndarray]) -> int:
    return int(sum(len(a) for a in events))


def exp_log_likelihood(
    mu: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    events: Sequence[np.ndarray],
    duration: float,
    with_grad: bool = False,
):
    """Exponential-kernel log-likelihood on ``[0, duration]``, with
    optional analytic gradients in ``(mu, alpha, beta)``.

    Runs the standard one-pass recursion over merged events with decay
    accumulators ``S_ij = sum exp(-beta_ij (t - t_l^j))`` and their age
    moments, so cost is O(N * D^2).
    """
    D = len(mu)
    t, d = merge_events(events)
    S = np.zeros((D, D))
    G = np.zeros((D, D))  # sum (t - t_l) exp(-beta (t - t_l)), for d/dbeta
    ll = 0.0
    g_mu = np.zeros(D)
    g_alpha = np.zeros((D, D))
    g_beta = np.zeros((D, D))
    t_prev = 0.0
    for k in range(len(t)):
        dt = t[k] - t_prev
        if dt > 0:
            decay = np.exp(-beta * dt)
            G = decay * (G + dt * S)
            S = decay * S
        i = d[k]
        lam = mu[i] + float(alpha[i] @ S[i])
        if lam <= 0 or not np.isfinite(lam):
            return (-np.inf, g_mu, g_alpha, g_beta) if with_grad else -np.inf
        ll += np.log(lam)
        if with_grad:
            inv = 1.0 / lam
            g_mu[i] += inv
            g_alpha[i] += inv * S[i]
            g_beta[i] -= inv * alpha[i] * G[i]
        S[:, i] += 1.0
        t_prev = t[k]

    # compensator: mu_i * T + sum_ij alpha_ij / beta_ij * sum_l (1 - e^{-beta_ij u_l})
    ll -= float(mu.sum()) * duration
    if with_grad:
        g_mu -= duration
    for j in range(D):
        if len(events[j]) == 0:
            continue
        u = duration - np.asarray(events[j], dtype=float)  # (n_j,)
        e = np.exp(-np.multiply.outer(beta[:, j], u))       # (D, n_j)
        one_minus = (1.0 - e).sum(axis=1)                   # (D,)
        ll -= float((alpha[:, j] / beta[:, j]) @ one_minus)
        if with_grad:
            g_alpha[:, j] -= one_minus / beta[:, j]
            ue_sum = (e * u).sum(axis=1)
            g_beta[:, j] -= alpha[:, j] * (
                -one_minus / beta[:, j] ** 2 + ue_sum / beta[:, j])
    if not np.isfinite(ll):
        return (-np.inf, g_mu, g_alpha, g_beta) if with_grad else -np.inf
    return (ll, g_mu, g_alpha, g_beta) if with_grad else ll


def sumexp_log_likelihood(
    mu: np.ndarray,
    alphas: np.ndarray,
    betas: np.ndarray,
    events: Sequence[np.ndarray],
    duration: float,
    with_grad: bool = False,
):
    """Sum-of-exponentials log-likelihood with fixed decays ``betas``;
    gradients only in ``(mu, alphas)`` since the decays are not fitted."""
    U = len(betas)
    D = len(mu)
    t, d = merge_events(events)
    A = np.zeros((U, D))  # per-decay, per-source accumulators
    ll = 0.0
    g_mu = np.zeros(D)
    g_alphas = np.zeros((U, D, D))
    t_prev = 0.0
    for k in range(len(t)):
        dt = t[k] - t_prev
        if dt > 0:
            A *= np.exp(-betas * dt)[:, None]
        i = d[k]
        lam = mu[i] + float((alphas[:, i, :] * A).sum())
        if lam <= 0 or not np.isfinite(lam):
            return (-np.inf, g_mu, g_alphas) if with_grad else -np.inf
        ll += np.log(lam)
        if with_grad:
            inv = 1.0 / lam
            g_mu[i] += inv
            g_alphas[:, i, :] += inv * A
        A[:, i] += 1.0
        t_prev = t[k]

    ll -= float(mu.sum()) * duration
    if with_grad:
        g_mu -= duration
    for j in range(D):
        if len(events[j]) == 0:
            continue
        u = duration - np.asarray(events[j], dtype=float)
        one_minus = (1.0 - np.exp(-np.multiply.outer(betas, u))).sum(axis=1)  # (U,)
        contrib = one_minus / betas                                           # (U,)
        ll -= float((alphas[:, :, j] * contrib[:, None]).sum())
        if with_grad:
            g_alphas[:, :, j] -= contrib[:, None]
    if not np.isfinite(ll):
        return (-np.inf, g_mu, g_alphas) if with_grad else -np.inf
    return (ll, g_mu, g_alphas) if with_grad else ll


def discretized_log_likelihood(
    mu: np.ndarray,
    kernel: DiscretizedKernel,
    events: Sequence[np.ndarray],
    duration: float,
) -> float:
    """Exact log-likelihood of a piecewise-constant-kernel model."""
    D = len(mu)
    t, d = merge_events(events)
    values = kernel.values
    width = kernel.bin_width
    ll = 0.0
    start = 0
    for k in range(len(t)):
        while t[k] - t[start] > kernel.support:
            start += 1
        i = d[k]
        lam = mu[i]
        for l in range(start, k):
            dt = t[k] - t[l]
            b = min(int(dt / width), kernel.bins - 1)
            lam += values[i, d[l], b]
        if lam <= 0 or not np.isfinite(lam):
            return -np.inf
        ll += np.log(lam)
    ll -= float(mu.sum()) * duration
    # compensator of the kernel part: each event of type j contributes the
    # kernel mass of every target i over the bins that fit before duration
    edges = np.arange(kernel.bins + 1) * width
    for j in range(D):
        for t_l in events[j]:
            room = duration - t_l
            overlap = np.clip(room - edges[:-1], 0.0, width)
            ll -= float(values[:, j, :].sum(axis=0) @ overlap)
    return float(ll)


def model_log_likelihood(model: HawkesModel, events: Sequence[np.ndarray],
                         duration: float) -> float:
    k = model.kernel
    if isinstance(k, ExponentialKernel):
        return exp_log_likelihood(model.mu, k.alpha, k.beta, events, duration)
    if isinstance(k, SumExpKernel):
        return sumexp_log_likelihood(model.mu, k.alphas, k.betas, events, duration)
    return discretized_log_likelihood(model.mu, k, events, duration)


def intensity_path(model: HawkesModel, events: Sequence[np.ndarray],
                   times: np.ndarray) -> np.ndarray:
    """Intensities (len(times), D) at probe times, given past events;
    probes must not coincide with event times (left limits elsewhere)."""
    D = model.dim
    t, d = merge_events(events)
    out = np.zeros((len(times), D))
    for r, probe in enumerate(np.asarray(times, dtype=float)):
        lam = model.mu.copy()
        mask = t < probe
        for t_l, d_l in zip(t[mask], d[mask]):
            lam += model.kernel.value(probe - t_l)[:, d_l]
        out[r] = lam
    return out


def model_to_text(model: HawkesModel) -> str:
    """Round-trippable text dump of a fitted model."""
    k = model.kernel
    payload: dict = {
        "dim": model.dim,
        "index": list(model.index.entries),
        "mu": model.mu.tolist(),
        "kernel_kind": k.kind,
        "converged": model.converged,
        "n_iters": model.n_iters,
        "log_lik": model.log_lik,
    }
    if isinstance(k, ExponentialKernel):
        payload["alpha"] = k.alpha.tolist()
        payload["beta"] = k.beta.tolist()
    elif isinstance(k, SumExpKernel):
        payload["alphas"] = k.alphas.tolist()
        payload["betas"] = k.betas.tolist()
    else:
        payload["support"] = k.support
        payload["values"] = k.values.tolist()
    return json.dumps(payload, sort_keys=True)


def model_from_text(text: str) -> HawkesModel:
    payload = json.loads(text)
    index = EventTypeIndex(tuple(payload["index"]))
    mu = np.asarray(payload["mu"], dtype=float)
    kind = payload["kernel_kind"]
    if kind == "exp":
        kernel: Kernel = ExponentialKernel(
            np.asarray(payload["alpha"], dtype=float),
            np.asarray(payload["beta"], dtype=float))
    elif kind == "sumexp":
        kernel = SumExpKernel(np.asarray(payload["alphas"], dtype=float),
                              np.asarray(payload["betas"], dtype=float))
    elif kind == "discretized":
        kernel = DiscretizedKernel(payload["support"],
                                   np.asarray(payload["values"], dtype=float))
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return HawkesModel(mu, kernel, index, converged=payload["converged"],
                       n_iters=payload["n_iters"], log_lik=payload["log_lik"])
