"""Kernel estimation: exponential and sum-of-exponentials maximum
likelihood, and the EM estimator for a discretized kernel.

All fitters work on per-component event-time arrays over ``[0, duration]``
seconds and return a :class:`HawkesModel`.  Convergence means the relative
likelihood change dropped below the tolerance; hitting the iteration cap
returns the best iterate with ``converged=False``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ._kernels import HAVE_NUMBA, exp_ll_grad_core, sumexp_ll_grad_core
from .model import (
    DiscretizedKernel,
    Diverged,
    EventTypeIndex,
    ExponentialKernel,
    HawkesModel,
    NoEvents,
    REF_INDEX,
    SumExpKernel,
    as_event_arrays,
    discretized_log_likelihood,
    exp_log_likelihood,
    merge_events,
    sumexp_log_likelihood,
    total_count,
)


class NonMonotoneEM(Exception):
    """The EM update decreased the log-likelihood beyond float slack."""


_MU_FLOOR = 1e-10
_BETA_FLOOR = 1e-3


def _default_index(events, index: EventTypeIndex | None) -> EventTypeIndex:
    if index is not None:
        if index.dim != len(events):
            raise ValueError("index dimension does not match event arrays")
        return index
    if len(events) == len(REF_INDEX.entries):
        return REF_INDEX
    return EventTypeIndex(tuple(f"DIM_{k}" for k in range(len(events))))


def _initial_exp_params(events, duration: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    D = len(events)
    mu0 = np.array([max(len(a), 1) / duration for a in events], dtype=float)
    t, _ = merge_events(events)
    mean_gap = (t[-1] - t[0]) / (len(t) - 1) if len(t) > 1 else duration
    beta0 = np.full((D, D), 1.0 / max(mean_gap, 1e-9))
    alpha0 = np.full((D, D), 0.1)
    # keep the starting point comfortably inside the stable region
    scale = alpha0 / beta0
    if scale.max() > 0.5 / D:
        alpha0 = beta0 * (0.5 / D)
    return mu0, alpha0, beta0


def fit_exponential_mle(
    events: Sequence,
    duration: float,
    *,
    index: EventTypeIndex | None = None,
    init: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    max_iters: int = 200,
    tolerance: float = 1e-8,
    grad_tolerance: float = 1e-5,
) -> HawkesModel:
    """Maximum-likelihood fit of ``mu`` and full ``alpha``/``beta``
    matrices, using analytic gradients under L-BFGS-B.

    ``tolerance`` is the relative likelihood-change stop; recovery studies
    on long samples should tighten ``grad_tolerance`` as well, because the
    likelihood flattens along the alpha-beta ridge long before the
    parameters settle."""
    events = as_event_arrays(events)
    if total_count(events) == 0:
        raise NoEvents("cannot fit on an empty window")
    if duration <= 0:
        raise ValueError("duration must be positive")
    idx = _default_index(events, index)
    D = len(events)
    mu0, alpha0, beta0 = init if init is not None else _initial_exp_params(events, duration)

    t_merged, d_merged = merge_events(events)

    def unpack(theta):
        mu = theta[:D]
        alpha = theta[D:D + D * D].reshape(D, D)
        beta = theta[D + D * D:].reshape(D, D)
        return mu, alpha, beta

    def evaluate(theta, with_grad):
        mu, alpha, beta = unpack(theta)
        if HAVE_NUMBA:
            return exp_ll_grad_core(t_merged, d_merged, mu,
                                    np.ascontiguousarray(alpha),
                                    np.ascontiguousarray(beta),
                                    duration, with_grad)
        return exp_log_likelihood(mu, alpha, beta, events, duration,
                                  with_grad=True)

    def objective(theta):
        ll, g_mu, g_alpha, g_beta = evaluate(theta, True)
        if not np.isfinite(ll):
            return 1e12, np.zeros_like(theta)
        grad = np.concatenate([g_mu, g_alpha.ravel(), g_beta.ravel()])
        return -ll, -grad

    theta0 = np.concatenate([mu0, alpha0.ravel(), beta0.ravel()])
    bounds = ([(_MU_FLOOR, None)] * D + [(0.0, None)] * (D * D)
              + [(_BETA_FLOOR, None)] * (D * D))
    res = minimize(objective, theta0, jac=True, method="L-BFGS-B",
                   bounds=bounds,
                   options={"maxiter": max_iters, "ftol": tolerance,
                            "gtol": grad_tolerance})
    mu, alpha, beta = unpack(res.x)
    ll = evaluate(res.x, False)[0] if HAVE_NUMBA else exp_log_likelihood(
        mu, alpha, beta, events, duration)
    if not np.isfinite(ll):
        raise Diverged("non-finite likelihood at the fitted point")
    return HawkesModel(mu.copy(), ExponentialKernel(alpha.copy(), beta.copy()),
                       idx, converged=bool(res.success), n_iters=int(res.nit),
                       log_lik=float(ll))


def fit_sum_exponential_mle(
    events: Sequence,
    duration: float,
    *,
    betas: Sequence[float] = (10.0, 100.0, 1000.0),
    index: EventTypeIndex | None = None,
    init: tuple[np.ndarray, np.ndarray] | None = None,
    max_iters: int = 200,
    tolerance: float = 1e-8,
    grad_tolerance: float = 1e-5,
) -> HawkesModel:
    """MLE over ``mu`` and component weights ``alpha_u`` with the decay
    ladder fixed; this problem is concave."""
    events = as_event_arrays(events)
    if total_count(events) == 0:
        raise NoEvents("cannot fit on an empty window")
    if duration <= 0:
        raise ValueError("duration must be positive")
    idx = _default_index(events, index)
    D = len(events)
    betas = np.asarray(betas, dtype=float)
    U = len(betas)
    if init is not None:
        mu0, alphas0 = init
    else:
        mu0 = np.array([max(len(a), 1) / duration for a in events], dtype=float)
        alphas0 = 0.1 * betas[:, None, None] / (U * D) * np.ones((U, D, D))

    t_merged, d_merged = merge_events(events)

    def unpack(theta):
        return theta[:D], theta[D:].reshape(U, D, D)

    def evaluate(theta, with_grad):
        mu, alphas = unpack(theta)
        if HAVE_NUMBA:
            return sumexp_ll_grad_core(t_merged, d_merged, mu,
                                       np.ascontiguousarray(alphas),
                                       betas, duration, with_grad)
        return sumexp_log_likelihood(mu, alphas, betas, events, duration,
                                     with_grad=True)

    def objective(theta):
        ll, g_mu, g_alphas = evaluate(theta, True)
        if not np.isfinite(ll):
            return 1e12, np.zeros_like(theta)
        return -ll, -np.concatenate([g_mu, g_alphas.ravel()])

    theta0 = np.concatenate([mu0, np.asarray(alphas0, dtype=float).ravel()])
    bounds = [(_MU_FLOOR, None)] * D + [(0.0, None)] * (U * D * D)
    res = minimize(objective, theta0, jac=True, method="L-BFGS-B",
                   bounds=bounds,
                   options={"maxiter": max_iters, "ftol": tolerance,
                            "gtol": grad_tolerance})
    mu, alphas = unpack(res.x)
    ll = evaluate(res.x, False)[0] if HAVE_NUMBA else sumexp_log_likelihood(
        mu, alphas, betas, events, duration)
    if not np.isfinite(ll):
        raise Diverged("non-finite likelihood at the fitted point")
    return HawkesModel(mu.copy(), SumExpKernel(alphas.copy(), betas.copy()),
                       idx, converged=bool(res.success), n_iters=int(res.nit),
                       log_lik=float(ll))


def fit_em_nonparametric(
    events: Sequence,
    duration: float,
    *,
    bins: int = 20,
    support: float = 0.1,
    index: EventTypeIndex | None = None,
    max_iters: int = 200,
    tolerance: float = 1e-8,
    details: dict | None = None,
) -> HawkesModel:
    """EM estimate of a piecewise-constant kernel on ``[0, support]``.

    E-step attributes each child event to its possible parents within the
    support or to the background; M-step re-estimates bin heights with
    exact edge correction.  The data log-likelihood is checked to be
    non-decreasing each iteration.

    When a ``details`` dict is passed it receives ``attributed`` (final
    responsibility mass per kernel cell, shape (D, D, bins)) and
    ``ll_trace``.
    """
    events = as_event_arrays(events)
    n_total = total_count(events)
    if n_total == 0:
        raise NoEvents("cannot fit on an empty window")
    if duration <= 0 or support <= 0 or bins < 1:
        raise ValueError("duration, support, and bins must be positive")
    idx = _default_index(events, index)
    D = len(events)
    width = support / bins
    t, d = merge_events(events)
    n = len(t)
    counts = np.array([len(a) for a in events], dtype=float)

    # candidate parent-child pairs with 0 < t_child - t_parent <= support
    child, parent = [], []
    lo = 0
    for k in range(n):
        while t[k] - t[lo] > support:
            lo += 1
        for l in range(lo, k):
            if t[k] > t[l]:
                child.append(k)
                parent.append(l)
    child = np.asarray(child, dtype=np.int64)
    parent = np.asarray(parent, dtype=np.int64)

    # edge-corrected exposure per (source type j, bin b)
    edges = np.arange(bins) * width
    room = duration - t  # (n,)
    overlap = np.clip(room[:, None] - edges[None, :], 0.0, width)  # (n, bins)
    exposure = np.zeros((D, bins))
    for j in range(D):
        exposure[j] = overlap[d == j].sum(axis=0)

    mu = 0.5 * counts / duration + 1e-12
    values = np.full((D, D, bins), 0.1 / support)

    if len(child) == 0:
        mu = counts / duration
        kernel = DiscretizedKernel(support, np.zeros((D, D, bins)))
        ll = discretized_log_likelihood(mu, kernel, events, duration)
        if details is not None:
            details["attributed"] = np.zeros((D, D, bins))
            details["ll_trace"] = [float(ll)]
        return HawkesModel(mu, kernel, idx, converged=True, n_iters=0,
                           log_lik=float(ll))

    dt = t[child] - t[parent]
    bin_of = np.minimum((dt / width).astype(np.int64), bins - 1)
    ci = d[child]   # target component of each pair
    pj = d[parent]  # source component
    cell = (ci * D + pj) * bins + bin_of  # flat kernel-cell id per pair
    child_type = d  # (n,)

    prev_ll = -np.inf
    ll_trace: list[float] = []
    cell_mass = np.zeros(D * D * bins)
    n_iters = 0
    for n_iters in range(1, max_iters + 1):
        # E-step: responsibilities against background + every candidate parent
        pair_rate = values.reshape(-1)[cell]
        lam = mu[child_type].copy()
        np.add.at(lam, child, pair_rate)
        resp = pair_rate / lam[child]
        bg = mu[child_type] / lam

        # M-step
        new_mu = np.zeros(D)
        np.add.at(new_mu, child_type, bg)
        new_mu = np.maximum(new_mu / duration, _MU_FLOOR)
        cell_mass = np.bincount(cell, weights=resp, minlength=D * D * bins)
        new_values = cell_mass.reshape(D, D, bins) / np.maximum(
            exposure[None, :, :], 1e-300)

        mu, values = new_mu, new_values

        # exact data log-likelihood of the current estimate
        pair_rate = values.reshape(-1)[cell]
        lam = mu[child_type].copy()
        np.add.at(lam, child, pair_rate)
        ll = _em_loglik(mu, values, lam, exposure, duration)
        ll_trace.append(ll)
        if ll < prev_ll - 1e-8 * max(1.0, abs(prev_ll)):
            raise NonMonotoneEM(
                f"log-likelihood fell from {prev_ll} to {ll} at iter {n_iters}")
        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= tolerance * max(1.0, abs(prev_ll)):
            prev_ll = ll
            break
        prev_ll = ll

    if details is not None:
        details["attributed"] = cell_mass.reshape(D, D, bins).copy()
        details["ll_trace"] = ll_trace
    return HawkesModel(mu, DiscretizedKernel(support, values), idx,
                       converged=n_iters < max_iters, n_iters=n_iters,
                       log_lik=float(prev_ll))


def _em_loglik(mu, values, lam, exposure, duration) -> float:
    comp = mu.sum() * duration + float(
        (values.sum(axis=0) * exposure).sum())
    return float(np.log(lam).sum() - comp)
