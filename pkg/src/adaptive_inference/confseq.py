"""Empirical-Bernstein confidence sequences with the gamma-exponential
mixture boundary (Howard, Ramdas, McAuliffe & Sekhon, 2021).

For rewards in an interval of width ``c``, ``S_n = sum(Y_i - mu)`` is
sub-exponential with scale ``c`` and variance process
``V_n = sum (Y_i - Yhat_{i-1})**2`` where ``Yhat`` is any predictable
prediction.  Mixing the sub-exponential supermartingale
``exp(lam * s - psi_E(lam) * v)`` with the density
``(1 - c*lam)**(rho/c^2 - 1) * exp(rho*lam/c)`` on ``[0, 1/c)`` gives the
closed form (``a = (v + rho)/c^2``, ``x = (c*s + v + rho)/c^2``,
``r = rho/c^2``, ``P`` the regularized lower incomplete gamma function)::

    log m(s, v) = (c*s + v)/c^2 + lgamma(a) + log P(a, x) - a*log(x)
                  - lgamma(r) - log P(r, r) + r*log(r)

``m(0, 0) = 1`` and ``m`` increases in ``s``; the one-sided boundary is
``u(v) = sup{s : m(s, v) < 1/alpha}`` and ``P(exists n: S_n >= u(V_n)) <= alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammainc, gammaln


def best_rho(v_opt: float, alpha: float) -> float:
    """Mixture precision that makes the boundary tight near intrinsic time ``v_opt``."""
    if v_opt <= 0 or not 0 < alpha < 1:
        raise ValueError("need v_opt > 0 and alpha in (0, 1)")
    log_inv = math.log(1.0 / alpha)
    return v_opt / (2.0 * log_inv + math.log(1.0 + 2.0 * log_inv))


def log_mixture(s, v, rho: float, c: float):
    """Log of the gamma-exponential mixture supermartingale at (s, v); s, v >= 0."""
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    c2 = c * c
    r = rho / c2
    a = (v + rho) / c2
    x = (c * s + v + rho) / c2
    const = r * math.log(r) - gammaln(r) - math.log(gammainc(r, r))
    return (c * s + v) / c2 + gammaln(a) + np.log(gammainc(a, x)) - a * np.log(x) + const


def gamma_exponential_bound(v, alpha: float, rho: float, c: float, iters: int = 200):
    """One-sided uniform boundary ``u(v)`` crossed with probability at most ``alpha``.

    Vectorized bisection on ``log m(s, v) = log(1/alpha)``.
    """
    if not 0 < alpha < 1 or rho <= 0 or c <= 0:
        raise ValueError("invalid boundary parameters")
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("intrinsic time must be non-negative")
    target = math.log(1.0 / alpha)
    lo = np.zeros_like(v)
    hi = np.maximum(np.sqrt(2.0 * (v + rho) * target), 1.0) + c * target
    while True:
        short = log_mixture(hi, v, rho, c) < target
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = log_mixture(mid, v, rho, c) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * hi):
            break
    return float(lo) if lo.ndim == 0 else lo


@dataclass(frozen=True)
class ConfSeqParams:
    """Confidence-sequence settings.

    ``c`` is the width of the reward support, ``v_opt`` the intrinsic time
    the boundary is tuned for, ``support`` the known reward interval used
    before the first observation and ``first_prediction`` the prediction of
    the first reward.
    """

    c: float = 2.0
    v_opt: float = 1.0
    support: tuple[float, float] | None = None
    first_prediction: float = 0.0

    def boundary(self, v, level: float):
        alpha = (1.0 - level) / 2.0
        return gamma_exponential_bound(v, alpha, best_rho(self.v_opt, alpha), self.c)


def tuned_v_opt(noise_variance: float, horizon: int, num_arms: int, exponent: float = 0.7) -> float:
    """Intrinsic time expected for an arm held at the probability floor:
    ``variance * floor((1/K) * sum_{t<=T} t**-exponent)``."""
    t_opt = math.floor(np.sum(np.arange(1, horizon + 1, dtype=float) ** -exponent) / num_arms)
    return noise_variance * max(t_opt, 1)


@dataclass(frozen=True)
class ConfSeqState:
    count: int = 0
    running_mean: float = 0.0
    variance_process: float = 0.0
    first_prediction: float = 0.0


def confseq_update(state: ConfSeqState, reward: float) -> ConfSeqState:
    predicted = state.running_mean if state.count > 0 else state.first_prediction
    count = state.count + 1
    return replace(
        state,
        count=count,
        variance_process=state.variance_process + (reward - predicted) ** 2,
        running_mean=state.running_mean + (reward - state.running_mean) / count,
    )


def confseq_process(rewards, first_prediction: float = 0.0) -> ConfSeqState:
    state = ConfSeqState(first_prediction=first_prediction)
    for y in rewards:
        state = confseq_update(state, float(y))
    return state


def confseq_interval(state: ConfSeqState, params: ConfSeqParams, level: float = 0.95):
    """Two-sided interval, each side at crossing probability ``(1 - level)/2``."""
    if state.count == 0:
        if params.support is None:
            return (-math.inf, math.inf)
        return tuple(params.support)
    radius = params.boundary(state.variance_process, level) / state.count
    return (state.running_mean - radius, state.running_mean + radius)


def contrast_union_interval(cs1, cs2):
    """Interval for (arm 2 - arm 1) from per-arm intervals by a union bound."""
    if cs1 is None or cs2 is None:
        raise ValueError("both per-arm intervals are required")
    lo1, hi1 = cs1
    lo2, hi2 = cs2
    return (lo2 - hi1, hi2 - lo1)


def running_variance_process(rewards: np.ndarray, first_prediction: float = 0.0) -> np.ndarray:
    """``V_n`` for n = 1..T along the last axis (predictable running-mean predictions)."""
    y = np.asarray(rewards, dtype=float)
    n = np.arange(1, y.shape[-1] + 1)
    means = np.cumsum(y, axis=-1) / n
    pred = np.empty_like(y)
    pred[..., 0] = first_prediction
    pred[..., 1:] = means[..., :-1]
    return np.cumsum((y - pred) ** 2, axis=-1)


def ever_violates(rewards: np.ndarray, mean: float, params: ConfSeqParams, level: float = 0.95):
    """For each stream (rows), whether ``mean`` ever leaves the confidence sequence.

    The truth is outside the interval at time n exactly when
    ``|S_n| > u(V_n)``, i.e. when ``log m(|S_n|, V_n) > log(1/alpha)``,
    so no root finding is needed.
    """
    y = np.atleast_2d(np.asarray(rewards, dtype=float))
    alpha = (1.0 - level) / 2.0
    rho = best_rho(params.v_opt, alpha)
    s = np.abs(np.cumsum(y - mean, axis=-1))
    v = running_variance_process(y, params.first_prediction)
    return np.any(log_mixture(s, v, rho, params.c) > math.log(1.0 / alpha), axis=-1)
