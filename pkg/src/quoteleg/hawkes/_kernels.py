"""JIT-compiled likelihood cores.

These mirror the reference implementations in :mod:`.model` exactly; the
test suite asserts both paths agree.  When numba is unavailable the
fitters fall back to the reference path.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is in the standard env
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


@njit(cache=True)
def exp_ll_grad_core(t, d, mu, alpha, beta, duration, with_grad):
    D = mu.shape[0]
    n = t.shape[0]
    S = np.zeros((D, D))
    G = np.zeros((D, D))
    g_mu = np.zeros(D)
    g_alpha = np.zeros((D, D))
    g_beta = np.zeros((D, D))
    ll = 0.0
    t_prev = 0.0
    for k in range(n):
        dt = t[k] - t_prev
        if dt > 0.0:
            for i in range(D):
                for j in range(D):
                    e = np.exp(-beta[i, j] * dt)
                    G[i, j] = e * (G[i, j] + dt * S[i, j])
                    S[i, j] = e * S[i, j]
        i = d[k]
        lam = mu[i]
        for j in range(D):
            lam += alpha[i, j] * S[i, j]
        if lam <= 0.0 or not np.isfinite(lam):
            return -np.inf, g_mu, g_alpha, g_beta
        ll += np.log(lam)
        if with_grad:
            inv = 1.0 / lam
            g_mu[i] += inv
            for j in range(D):
                g_alpha[i, j] += inv * S[i, j]
                g_beta[i, j] -= inv * alpha[i, j] * G[i, j]
        for i2 in range(D):
            S[i2, i] += 1.0
        t_prev = t[k]

    ll -= mu.sum() * duration
    if with_grad:
        for i in range(D):
            g_mu[i] -= duration
    for k in range(n):
        j = d[k]
        u = duration - t[k]
        for i in range(D):
            e = np.exp(-beta[i, j] * u)
            om = 1.0 - e
            ll -= alpha[i, j] / beta[i, j] * om
            if with_grad:
                g_alpha[i, j] -= om / beta[i, j]
                g_beta[i, j] -= alpha[i, j] * (
                    -om / (beta[i, j] * beta[i, j]) + u * e / beta[i, j])
    if not np.isfinite(ll):
        return -np.inf, g_mu, g_alpha, g_beta
    return ll, g_mu, g_alpha, g_beta


@njit(cache=True)
def sumexp_ll_grad_core(t, d, mu, alphas, betas, duration, with_grad):
    U = betas.shape[0]
    D = mu.shape[0]
    n = t.shape[0]
    A = np.zeros((U, D))
    g_mu = np.zeros(D)
    g_alphas = np.zeros((U, D, D))
    ll = 0.0
    t_prev = 0.0
    for k in range(n):
        dt = t[k] - t_prev
        if dt > 0.0:
            for u in range(U):
                e = np.exp(-betas[u] * dt)
                for j in range(D):
                    A[u, j] *= e
        i = d[k]
        lam = mu[i]
        for u in range(U):
            for j in range(D):
                lam += alphas[u, i, j] * A[u, j]
        if lam <= 0.0 or not np.isfinite(lam):
            return -np.inf, g_mu, g_alphas
        ll += np.log(lam)
        if with_grad:
            inv = 1.0 / lam
            g_mu[i] += inv
            for u in range(U):
                for j in range(D):
                    g_alphas[u, i, j] += inv * A[u, j]
        for u in range(U):
            A[u, i] += 1.0
        t_prev = t[k]

    ll -= mu.sum() * duration
    if with_grad:
        for i in range(D):
            g_mu[i] -= duration
    for k in range(n):
        j = d[k]
        u_t = duration - t[k]
        for u in range(U):
            om = (1.0 - np.exp(-betas[u] * u_t)) / betas[u]
            for i in range(D):
                ll -= alphas[u, i, j] * om
                if with_grad:
                    g_alphas[u, i, j] -= om
    if not np.isfinite(ll):
        return -np.inf, g_mu, g_alphas
    return ll, g_mu, g_alphas
