"""Evaluation weights: uniform, and variance-stabilizing stick-breaking weights
driven by a constant or two-point allocation rate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .history import BanditHistory

SCHEMES = ("uniform", "constant_alloc", "two_point_alloc")


def _tail_integral(t, T, alpha):
    """``(T**(1-alpha) - t**(1-alpha)) / (1-alpha)`` without cancellation; 0 at t == T."""
    t = np.asarray(t, dtype=float)
    b = 1.0 - alpha
    return t**b * np.expm1(b * np.log1p((T - t) / t)) / b


def allocation_constant(t, T):
    """Allocation rate ``1 / (T - t + 1)``."""
    t = np.asarray(t)
    if np.any((t < 1) | (t > T)):
        raise ValueError(f"t must lie in [1, {T}]")
    out = 1.0 / (T - t + 1.0)
    return float(out) if out.ndim == 0 else out


def allocation_two_point(t, T, e, alpha: float = 0.7):
    """Two-point allocation rate.

    Mixes the constant rate (propensity stays high) with the rate obtained
    when propensities decay like ``t**-alpha``, weighting the first scenario
    by the current propensity ``e``.  Equals 1 at ``t == T``.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any((t < 1) | (t > T)):
        raise ValueError(f"t must lie in [1, {T}]")
    if np.any((e < 0) | (e > 1)):
        raise ValueError("propensity must lie in [0, 1]")
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    decay = t**-alpha
    tail = _tail_integral(t, T, alpha)
    lam = e / (T - t + 1.0) + (1.0 - e) * decay / (decay + tail)
    lam = np.where(t == T, 1.0, lam)
    return float(lam) if lam.ndim == 0 else lam


def stick_break_step(budget: float, lambda_t: float, e_t: float) -> tuple[float, float]:
    """Spend ``lambda_t`` of the remaining variance budget on one step.

    Returns the weight ``h_t = sqrt(budget * lambda_t * e_t)`` and the budget
    left afterwards.
    """
    if budget < 0 or lambda_t < 0 or e_t < 0:
        raise ValueError("budget, allocation rate and propensity must be non-negative")
    if budget > 1 or lambda_t > 1 or e_t > 1:
        raise ValueError("budget, allocation rate and propensity must be at most 1")
    h = float(np.sqrt(budget * lambda_t * e_t))
    return h, max(budget * (1.0 - lambda_t), 0.0)


def stick_breaking(e: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights and budget trace for allocation rates ``lam`` along axis 0.

    ``budget[t-1]`` is the budget available before step t, i.e. the product
    of ``1 - lam`` over earlier steps.
    """
    keep = np.clip(1.0 - lam, 0.0, 1.0)
    budget = np.ones_like(lam)
    budget[1:] = np.cumprod(keep, axis=0)[:-1]
    h = np.sqrt(budget * lam * e)
    return h, budget


@dataclass(frozen=True)
class WeightSchedule:
    target_arm: int
    h: np.ndarray
    lam: np.ndarray
    budget_trace: np.ndarray
    scheme: str
    alpha: float | None = None

    def __len__(self):
        return len(self.h)


def allocation_rates(e: np.ndarray, T: int, scheme: str, alpha: float = 0.7) -> np.ndarray:
    """Allocation rate per step for propensities ``e`` (axis 0 is time).

    The final step always gets rate 1 so the budget is exhausted.
    """
    t = np.arange(1, len(e) + 1, dtype=float).reshape((-1,) + (1,) * (np.ndim(e) - 1))
    if scheme == "constant_alloc":
        lam = np.broadcast_to(1.0 / (T - t + 1.0), np.shape(e)).copy()
    elif scheme == "two_point_alloc":
        lam = np.array(allocation_two_point(np.broadcast_to(t, np.shape(e)), T, e, alpha), ndmin=1)
        lam = lam.reshape(np.shape(e))
    else:
        raise ValueError(f"scheme {scheme!r} has no allocation rate")
    if len(e) == T:
        lam[-1] = 1.0
    return lam


def build_schedule(history: BanditHistory, arm: int, scheme: str = "two_point_alloc",
                   alpha: float = 0.7) -> WeightSchedule:
    """Evaluation weights for ``arm`` over a completed history."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown weight scheme {scheme!r}; expected one of {SCHEMES}")
    T = len(history)
    if scheme == "uniform":
        nan = np.full(T, np.nan)
        return WeightSchedule(arm, np.ones(T), nan, nan.copy(), scheme)
    e = history.propensities[:, arm]
    lam = allocation_rates(e, T, scheme, alpha)
    h, budget = stick_breaking(e, lam)
    return WeightSchedule(arm, h, lam, budget, scheme,
                          alpha if scheme == "two_point_alloc" else None)


def check_allocation_bounds(lambda_t, t, T, e_t, alpha, c_prime, rtol: float = 1e-12) -> bool:
    """Whether ``lambda_t`` sits between the rates required for asymptotic normality:

    ``1/(T-t+1) <= lambda_t <= c_prime * e_t / (t**-alpha + T**(1-alpha) - t**(1-alpha))``.
    """
    lower = 1.0 / (T - t + 1.0)
    upper = c_prime * e_t / (t**-alpha + (1 - alpha) * _tail_integral(t, T, alpha))
    return bool(lambda_t >= lower * (1 - rtol) and lambda_t <= upper * (1 + rtol))


def two_point_lower_gap(t, T, alpha):
    """``t^-a / (t^-a + (T^(1-a) - t^(1-a)) / (1-a)) - 1/(1+T-t)``; never negative."""
    t = np.asarray(t, dtype=float)
    decay = t**-alpha
    return decay / (decay + _tail_integral(t, T, alpha)) - 1.0 / (1.0 + T - t)


def weight_diagnostics(h: np.ndarray, e: np.ndarray, delta: float = 1.0) -> dict:
    """Single-run proxies for the infinite-sampling, variance-convergence and
    bounded-moment conditions (expectations replaced by realized sums)."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(e, dtype=float)
    pos = e > 0
    spent = float(np.sum(h[pos] ** 2 / e[pos]))
    moment = float(np.sum(h[pos] ** (2 + delta) / e[pos] ** (1 + delta)))
    return {
        "variance_sum": spent,
        "effective_sample_ratio": float(h.sum() ** 2 / spent) if spent > 0 else float("nan"),
        "lyapunov_ratio": moment / spent ** (1 + delta / 2) if spent > 0 else float("nan"),
    }
