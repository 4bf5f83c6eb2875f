"""Convergence diagnostics: effective sample size and split R-hat."""

from __future__ import annotations

import numpy as np


def _as_chains(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected draws of shape (draws,) or (chains, draws)")
    return x


def autocorrelation(x):
    """Sample autocorrelation of a 1-D series via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    fx = np.fft.rfft(x, size)
    acov = np.fft.irfft(fx * np.conjugate(fx), size)[:n] / n
    if acov[0] <= 0:
        return np.r_[1.0, np.zeros(n - 1)]
    return acov / acov[0]


def ess(x):
    """Effective sample size over one or more chains (Geyer's initial monotone sequence)."""
    chains = _as_chains(x)
    m, n = chains.shape
    if n < 4:
        return float("nan")
    if np.all(chains == chains[0, 0]):
        return float("nan")
    acov = np.array([autocorrelation(c) * c.var() for c in chains])
    chain_var = chains.var(axis=1, ddof=1)
    w = chain_var.mean()
    var_plus = w * (n - 1) / n
    if m > 1:
        var_plus += chains.mean(axis=1).var(ddof=1)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum autocorrelation pairs while positive, enforcing monotonicity
    tau = -1.0
    prev = np.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        prev = pair
        tau += 2.0 * pair
    tau = max(tau, 1.0 / np.log10(m * n)) if m * n > 1 else tau
    return float(m * n / tau)


def split_rhat(x):
    """Split R-hat; chains are halved so a single chain can be checked too."""
    chains = _as_chains(x)
    n = chains.shape[1] // 2
    if n < 2:
        return float("nan")
    halves = np.vstack([chains[:, :n], chains[:, -n:]])
    w = halves.var(axis=1, ddof=1).mean()
    b = n * halves.mean(axis=1).var(ddof=1)
    if w == 0:
        return float("nan")
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def mcse(x):
    """Monte Carlo standard error of the mean."""
    chains = _as_chains(x)
    return float(chains.std(ddof=1) / np.sqrt(ess(chains)))


def summarize(columns, traces, skip=("iteration",)):
    """ESS and R-hat per column over a list of (draws, columns) traces of equal length."""
    n = min(t.shape[0] for t in traces)
    out = {}
    for i, name in enumerate(columns):
        if name in skip:
            continue
        stack = np.array([t[:n, i] for t in traces])
        if not np.all(np.isfinite(stack)):
            out[name] = {"ess": None, "rhat": None, "mean": None}
            continue
        e, r = ess(stack), split_rhat(stack)
        out[name] = {
            "ess": None if np.isnan(e) else e,
            "rhat": None if np.isnan(r) else r,
            "mean": float(stack.mean()),
        }
    return out
