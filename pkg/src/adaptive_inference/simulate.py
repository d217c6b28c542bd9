"""Lockstep replication engine.

Runs many independent replications of one design side by side, one step at
a time, with every per-replication quantity held in arrays whose leading
axis is the replication.  Estimators are accumulated online so memory does
not grow with the horizon; ``estimators.estimate`` on a stored history is
the reference these accumulators are tested against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import rng as rngmod
from .confseq import ConfSeqParams, best_rho, gamma_exponential_bound
from .designs import (
    DesignConfig,
    apply_floor_array,
    argmax_frequencies,
    arm_from_uniform,
    floor_value,
    posterior_params,
    thompson_exact_probs,
    two_stage_probs,
)
from .environment import ArmOutcomeModel
from .estimators import AW_FAMILY, WAVG_FAMILY, default_wd_lambda, normal_quantile
from .history import BanditHistory
from .weights import allocation_two_point

_MC_BLOCK = 4_000_000  # max posterior draws held in memory at once


@dataclass
class EngineSpec:
    model: ArmOutcomeModel
    design: DesignConfig
    horizon: int
    estimators: tuple[str, ...]
    level: float = 0.95
    alpha: float = 0.7
    wd_lambda: float | None = None
    cs_params: ConfSeqParams | None = None
    keep_histories: bool = False
    lambda_path: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.design.name == "two_stage":
            if self.model.num_arms != 2:
                raise ValueError("the two-stage design needs exactly two arms")
            if self.horizon % 2:
                raise ValueError("the two-stage design needs an even horizon")
        if self.design.name == "fixed" and len(self.design.probs) != self.model.num_arms:
            raise ValueError("fixed probabilities do not match the number of arms")


@dataclass
class BatchResult:
    """Per-replication output of one engine run.

    ``cells[(estimator, arm)]`` maps to a dict with arrays ``point``,
    ``variance`` (NaN for confidence sequences), ``lo``, ``hi`` and a
    boolean ``defined``; arm-level only, contrasts are formed later.
    """

    seeds: np.ndarray
    pulls: np.ndarray
    cells: dict
    diagnostics: dict = field(default_factory=dict)
    histories: list | None = None
    lambda_path_sum: np.ndarray | None = None


class _WeightedScores:
    """Running sums for ``sum h*G / sum h`` and its variance, all arms at once."""

    def __init__(self, shape):
        self.s_h = np.zeros(shape)
        self.s_hg = np.zeros(shape)
        self.s_h2 = np.zeros(shape)
        self.s_h2g = np.zeros(shape)
        self.s_h2g2 = np.zeros(shape)

    def add(self, h, g):
        h2 = h * h
        self.s_h += h
        self.s_hg += h * g
        self.s_h2 += h2
        h2g = h2 * g
        self.s_h2g += h2g
        self.s_h2g2 += h2g * g

    def finish(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            point = self.s_hg / self.s_h
            var = (self.s_h2g2 - 2.0 * point * self.s_h2g + point**2 * self.s_h2) / self.s_h**2
        return point, np.maximum(var, 0.0)


def _thompson_raw(spec: EngineSpec, seeds, counts, sums, t):
    d = spec.design
    means, variances = posterior_params(counts, sums, d.prior_mean, d.prior_var, d.likelihood_var)
    if d.method == "exact":
        return thompson_exact_probs(means, variances)
    k = counts.shape[1]
    sds = np.sqrt(variances)
    out = np.empty_like(means)
    rows = max(1, _MC_BLOCK // (d.num_draws * k))
    for start in range(0, len(seeds), rows):
        sl = slice(start, start + rows)
        u = rngmod.uniforms(seeds[sl], rngmod.POSTERIOR, t, d.num_draws * k)
        z = ndtri(u).reshape(-1, d.num_draws, k)
        out[sl] = argmax_frequencies(means[sl], sds[sl], z)
    return out


def run_batch(spec: EngineSpec, seeds) -> BatchResult:
    """Simulate one replication per seed and accumulate every requested estimator."""
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1)
    R, K, T = len(seeds), spec.model.num_arms, spec.horizon
    design = spec.design
    names = set(spec.estimators)
    q = np.asarray(spec.model.arm_means)

    counts = np.zeros((R, K))
    sums = np.zeros((R, K))
    sumsq = np.zeros((R, K))
    zero_seen = np.zeros((R, K), dtype=bool)

    schemes = {AW_FAMILY[n][0] for n in names if n in AW_FAMILY}
    schemes |= {WAVG_FAMILY[n] for n in names if n in WAVG_FAMILY}
    budgets = {s: np.ones((R, K)) for s in schemes if s != "uniform"}
    aw = {n: _WeightedScores((R, K)) for n in names if n in AW_FAMILY}
    wavg = {n: _WeightedScores((R, K)) for n in names if n in WAVG_FAMILY}
    diag = {s: (np.zeros((R, K)), np.zeros((R, K))) for s in budgets}  # sum h^2/e, sum h^3/e^2
    cs_v = np.zeros((R, K)) if "howard_cs" in names else None
    wd_rows = []
    lam_path = np.zeros((T, K)) if spec.lambda_path else None

    keep = spec.keep_histories or "w_decorrelation" in names
    if keep:
        hist_e = np.empty((R, T, K))
        hist_w = np.empty((R, T), dtype=np.int64)
        hist_y = np.empty((R, T))

    rows = np.arange(R)
    e = None
    if design.name == "fixed":
        e = np.broadcast_to(np.asarray(design.probs), (R, K))
    half = T // 2
    for t in range(1, T + 1):
        if design.name == "thompson_floor":
            if (t - 1) % design.batch_size == 0:
                raw = _thompson_raw(spec, seeds, counts, sums, t)
                floor = floor_value(t, K, design.floor_exponent, design.floor_scale)
                e = apply_floor_array(raw, np.full(R, floor))
        elif design.name == "two_stage":
            if t == 1:
                e = np.full((R, K), 0.5)
            elif t == half + 1:
                e = two_stage_probs(counts, sums)

        arms = arm_from_uniform(e, rngmod.uniforms(seeds, rngmod.DESIGN, t))
        y = spec.model.reward_from_uniform(arms, rngmod.uniforms(seeds, rngmod.ENV, t))
        ind = np.zeros((R, K))
        ind[rows, arms] = 1.0
        pos = e > 0
        zero_seen |= ~pos
        m = np.divide(sums, counts, out=np.zeros((R, K)), where=counts > 0)
        ratio = np.divide(ind, e, out=np.zeros((R, K)), where=pos)
        yk = y[:, None]

        h_by_scheme = {"uniform": 1.0}
        for scheme, budget in budgets.items():
            if scheme == "constant_alloc":
                lam = np.full((R, K), 1.0 / (T - t + 1.0))
            else:
                lam = allocation_two_point(np.full((R, K), float(t)), T, e, spec.alpha)
                if lam_path is not None:
                    lam_path[t - 1] += (T - t) * lam.sum(axis=0)
            if t == T:
                lam = np.ones((R, K))
            h = np.sqrt(budget * lam * e)
            budget *= np.clip(1.0 - lam, 0.0, 1.0)
            h_by_scheme[scheme] = h
            h2e = np.divide(h * h, e, out=np.zeros((R, K)), where=pos)
            diag[scheme][0][...] += h2e
            diag[scheme][1][...] += np.divide(h2e * h, e, out=np.zeros((R, K)), where=pos)

        if aw:
            scores = {"running": ratio * yk + (1.0 - ratio) * m}
            if "ipw" in aw:
                scores["zero"] = ratio * yk + (1.0 - ratio) * 0.0
            for name, acc in aw.items():
                scheme, plug = AW_FAMILY[name]
                acc.add(np.broadcast_to(h_by_scheme[scheme], (R, K)), scores[plug])
        for name, acc in wavg.items():
            a = h_by_scheme[WAVG_FAMILY[name]] * ratio
            acc.add(a, np.broadcast_to(yk, (R, K)))
        if cs_v is not None:
            pred = np.where(counts > 0, m, spec.cs_params.first_prediction)
            cs_v += ind * (yk - pred) ** 2
        if keep:
            hist_e[:, t - 1] = e
            hist_w[:, t - 1] = arms
            hist_y[:, t - 1] = y

        counts += ind
        sums += ind * yk
        sumsq += ind * yk * yk

    cells = {}
    with np.errstate(invalid="ignore", divide="ignore"):
        pulled = counts > 0
        mean = sums / counts
        z = float(normal_quantile(0.5 + spec.level / 2.0))
        if "sample_mean" in names:
            var = np.maximum(sumsq - counts * mean**2, 0.0) / counts**2
            cells.update(_arm_cells("sample_mean", mean, var, pulled, z))
        for name, acc in aw.items():
            point, var = acc.finish()
            cells.update(_arm_cells(name, point, var, ~zero_seen & (acc.s_h > 0), z))
        for name, acc in wavg.items():
            point = acc.s_hg / acc.s_h
            # sum a^2 (Y - point)^2 over pulled steps
            var = np.maximum(acc.s_h2g2 - 2.0 * point * acc.s_h2g + point**2 * acc.s_h2, 0.0) / acc.s_h**2
            cells.update(_arm_cells(name, point, var, ~zero_seen & (acc.s_h > 0), z))
        if cs_v is not None:
            cells.update(_cs_cells(spec, mean, counts, cs_v))
    if "w_decorrelation" in names:
        cells.update(_wd_cells(spec, hist_w, hist_y, z))

    diagnostics = {}
    for scheme, (h2e, h3e2) in diag.items():
        with np.errstate(invalid="ignore", divide="ignore"):
            diagnostics[scheme] = {"variance_sum": h2e, "lyapunov_ratio": h3e2 / h2e**1.5}

    histories = None
    if spec.keep_histories:
        histories = [BanditHistory(hist_e[r], hist_w[r], hist_y[r], K, T, validate=False)
                     for r in range(R)]
    return BatchResult(seeds, counts.astype(np.int64), cells, diagnostics, histories, lam_path)


def _arm_cells(name, point, var, defined, z):
    out = {}
    half = z * np.sqrt(var)
    for w in range(point.shape[1]):
        d = defined[:, w] & np.isfinite(point[:, w])
        out[(name, w)] = {
            "point": np.where(d, point[:, w], np.nan),
            "variance": np.where(d, var[:, w], np.nan),
            "lo": np.where(d, point[:, w] - half[:, w], np.nan),
            "hi": np.where(d, point[:, w] + half[:, w], np.nan),
            "defined": d,
        }
    return out


def _cs_cells(spec: EngineSpec, mean, counts, v):
    params = spec.cs_params
    alpha = (1.0 - spec.level) / 2.0
    radius = gamma_exponential_bound(v, alpha, best_rho(params.v_opt, alpha), params.c) / np.maximum(counts, 1)
    out = {}
    for w in range(mean.shape[1]):
        pulled = counts[:, w] > 0
        if params.support is not None:
            lo0, hi0 = params.support
        else:
            lo0, hi0 = -np.inf, np.inf
        out[("howard_cs", w)] = {
            "point": np.where(pulled, mean[:, w], np.nan),
            "variance": np.full(len(mean), np.nan),
            "lo": np.where(pulled, mean[:, w] - radius[:, w], lo0),
            "hi": np.where(pulled, mean[:, w] + radius[:, w], hi0),
            "defined": np.ones(len(mean), dtype=bool),
        }
    return out


def _wd_cells(spec: EngineSpec, arms, rewards, z):
    R, T = arms.shape
    K = spec.model.num_arms
    point = np.full((R, K), np.nan)
    var = np.full((R, K), np.nan)
    for w in range(K):
        mask = arms == w
        n = mask.sum(axis=1)
        # rank of each pull among the arm's pulls, 0-based
        rank = np.cumsum(mask, axis=1) - 1
        for r in np.flatnonzero(n > 0):
            lam = spec.wd_lambda if spec.wd_lambda is not None else default_wd_lambda(int(n[r]), T)
            ratio = lam / (1.0 + lam)
            y = rewards[r, mask[r]]
            a = ratio ** rank[r, mask[r]].astype(float) / (1.0 + lam)
            ybar = y.mean()
            resid = y - ybar
            point[r, w] = ybar + np.dot(a, resid)
            var[r, w] = np.sum(a**2 * resid**2)
    return _arm_cells("w_decorrelation", point, var, np.isfinite(point), z)
