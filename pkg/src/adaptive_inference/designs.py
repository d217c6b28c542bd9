"""Assignment designs: floored Thompson sampling, the two-stage design and
fixed randomization.

The scalar functions here (``thompson_floor_step``, ``apply_floor`` ...) act
on one experiment.  The ``*_array`` helpers do the same arithmetic over a
leading batch axis and are what the replication engine calls; the scalar
versions are thin wrappers so both paths share one implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri, owens_t

DESIGNS = ("thompson_floor", "two_stage", "fixed")


@dataclass(frozen=True)
class DesignConfig:
    """Design name plus its tuning knobs.

    Parameters
    ----------
    name : {"thompson_floor", "two_stage", "fixed"}
    probs : fixed assignment probabilities (``fixed`` only)
    floor_exponent : decay rate of the floor ``floor_scale * (1/K) * t**-floor_exponent``
    floor_scale : multiplier on the floor, in (0, 1]
    num_draws : posterior draws L for Monte Carlo Thompson probabilities
    method : "mc" (fraction of L joint posterior draws) or "exact"
        (closed-form probability of being the argmax, K <= 3)
    likelihood_var : known reward variance in the normal-normal update
    prior_mean, prior_var : normal prior shared by all arms
    batch_size : number of consecutive steps sharing one propensity vector
    """

    name: str = "thompson_floor"
    probs: tuple[float, ...] | None = None
    floor_exponent: float = 0.7
    floor_scale: float = 1.0
    num_draws: int = 10_000
    method: str = "mc"
    likelihood_var: float = 1.0
    prior_mean: float = 0.0
    prior_var: float = 1.0
    batch_size: int = 1

    def __post_init__(self):
        if self.name not in DESIGNS:
            raise ValueError(f"unknown design {self.name!r}; expected one of {DESIGNS}")
        if self.name == "fixed":
            if self.probs is None:
                raise ValueError("fixed design needs probabilities")
            probs = np.asarray(self.probs, dtype=float)
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
                raise ValueError(f"fixed probabilities must be >= 0 and sum to 1, got {self.probs}")
            object.__setattr__(self, "probs", tuple(float(p) for p in probs))
        if self.method not in ("mc", "exact"):
            raise ValueError(f"unknown Thompson method {self.method!r}")
        if self.num_draws < 1:
            raise ValueError("num_draws must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.floor_scale <= 1:
            raise ValueError("floor_scale must lie in (0, 1]")
        if self.likelihood_var <= 0 or self.prior_var <= 0:
            raise ValueError("variances must be positive")


def parse_design(spec: str, **params) -> DesignConfig:
    """Parse ``thompson_floor``, ``two_stage`` or ``fixed:p1,p2,...``."""
    if spec.startswith("fixed:"):
        probs = tuple(float(p) for p in spec[len("fixed:"):].split(",") if p.strip())
        return DesignConfig(name="fixed", probs=probs, **params)
    return DesignConfig(name=spec, **params)


# -- propensity vectors -----------------------------------------------------


@dataclass(frozen=True)
class PropensityVector:
    probs: tuple[float, ...]
    floor_value: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"propensities sum to {p.sum()!r}, not 1")
        if np.any(p < self.floor_value - 1e-15):
            raise ValueError("propensity below floor")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __len__(self):
        return len(self.probs)


def floor_value(t, num_arms: int, exponent: float = 0.7, scale: float = 1.0):
    """Probability floor ``scale * (1/K) * t**-exponent``."""
    return scale * np.asarray(t, dtype=float) ** (-exponent) / num_arms


def apply_floor_array(raw: np.ndarray, floor) -> np.ndarray:
    """Floor every row of ``raw`` (shape ``(..., K)``) at ``floor`` (shape ``(...)``).

    Arms under the floor are lifted to it; the others are shrunk towards it,
    ``floor + c * (raw - floor)``, with ``c`` chosen so rows sum to one.
    """
    raw = np.asarray(raw, dtype=float)
    k = raw.shape[-1]
    floor = np.asarray(floor, dtype=float)[..., None]
    if np.any(floor > 1.0 / k + 1e-15):
        raise ValueError(f"floor exceeds 1/K = {1.0 / k}")
    above = raw >= floor
    excess = np.where(above, raw - floor, 0.0)
    total = excess.sum(axis=-1, keepdims=True)
    c = np.divide(1.0 - k * floor, total, out=np.zeros_like(total), where=total > 0)
    return np.where(above, floor + c * excess, floor)


def apply_floor(raw, floor: float) -> PropensityVector:
    raw = np.asarray(raw, dtype=float)
    if abs(raw.sum() - 1.0) > 1e-9:
        raise ValueError("raw probabilities must sum to one")
    if not 0 < floor <= 1.0 / raw.size + 1e-15:
        raise ValueError(f"floor {floor} infeasible for {raw.size} arms")
    return PropensityVector(tuple(apply_floor_array(raw, floor)), floor)


# -- Thompson sampling --------------------------------------------------------


@dataclass(frozen=True)
class PosteriorState:
    """Normal-normal posterior per arm, kept as sufficient statistics."""

    pull_count: tuple[int, ...]
    reward_sum: tuple[float, ...]
    prior_mean: float = 0.0
    prior_var: float = 1.0
    likelihood_var: float = 1.0

    @classmethod
    def initial(cls, num_arms: int, prior_mean=0.0, prior_var=1.0, likelihood_var=1.0):
        return cls((0,) * num_arms, (0.0,) * num_arms, prior_mean, prior_var, likelihood_var)

    @property
    def num_arms(self) -> int:
        return len(self.pull_count)

    @property
    def posterior_mean(self) -> np.ndarray:
        return posterior_params(np.array(self.pull_count), np.array(self.reward_sum),
                                self.prior_mean, self.prior_var, self.likelihood_var)[0]

    @property
    def posterior_var(self) -> np.ndarray:
        return posterior_params(np.array(self.pull_count), np.array(self.reward_sum),
                                self.prior_mean, self.prior_var, self.likelihood_var)[1]


def posterior_params(counts, sums, prior_mean=0.0, prior_var=1.0, likelihood_var=1.0):
    """Posterior means and variances from pull counts and reward sums."""
    precision = 1.0 / prior_var + np.asarray(counts, dtype=float) / likelihood_var
    mean = (prior_mean / prior_var + np.asarray(sums, dtype=float) / likelihood_var) / precision
    return mean, 1.0 / precision


def posterior_update(state: PosteriorState, arm: int, reward: float) -> PosteriorState:
    counts = list(state.pull_count)
    sums = list(state.reward_sum)
    counts[arm] += 1
    sums[arm] += float(reward)
    return replace(state, pull_count=tuple(counts), reward_sum=tuple(sums))


def argmax_frequencies(means, sds, z) -> np.ndarray:
    """Fraction of joint posterior draws won by each arm.

    ``z`` holds standard normals of shape ``(..., L, K)``; ``means`` and
    ``sds`` have shape ``(..., K)``.  Ties go to the lowest arm index.
    """
    draws = np.asarray(means)[..., None, :] + np.asarray(sds)[..., None, :] * z
    winners = np.argmax(draws, axis=-1)
    k = draws.shape[-1]
    counts = np.stack([(winners == w).sum(axis=-1) for w in range(k)], axis=-1)
    return counts / z.shape[-2]


def thompson_raw_probs(state: PosteriorState, num_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo Thompson probabilities from ``num_draws`` joint posterior draws."""
    if num_draws < 1:
        raise ValueError("num_draws must be >= 1")
    z = ndtri(rng.random((num_draws, state.num_arms)))
    return argmax_frequencies(state.posterior_mean, np.sqrt(state.posterior_var), z)


def _bvn_cdf(h, k, rho, q):
    """P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.

    Owen's T representation; ``q = sqrt(1 - rho**2)`` is passed in so callers
    can compute it without cancellation.  Zeros are nudged off the axes,
    where the representation has removable discontinuities.
    """
    tiny = 1e-150
    h = np.where(h == 0, tiny, h)
    k = np.where(k == 0, tiny, k)
    a_h = (k - rho * h) / (h * q)
    a_k = (h - rho * k) / (k * q)
    beta = np.where(h * k < 0, 0.5, 0.0)
    return 0.5 * ndtr(h) + 0.5 * ndtr(k) - owens_t(h, a_h) - owens_t(k, a_k) - beta


def thompson_exact_probs(means, variances) -> np.ndarray:
    """Probability each arm has the largest draw under independent normal posteriors.

    Works over a leading batch axis; supports K <= 3.
    """
    m = np.asarray(means, dtype=float)
    v = np.asarray(variances, dtype=float)
    k = m.shape[-1]
    if k == 1:
        return np.ones_like(m)
    if k == 2:
        s = np.sqrt(v[..., 0] + v[..., 1])
        p0 = ndtr((m[..., 0] - m[..., 1]) / s)
        p1 = ndtr((m[..., 1] - m[..., 0]) / s)
        out = np.stack([p0, p1], axis=-1)
    elif k == 3:
        cols = []
        for w in range(3):
            i, j = [a for a in range(3) if a != w]
            vw, vi, vj = v[..., w], v[..., i], v[..., j]
            si, sj = vw + vi, vw + vj
            h = (m[..., w] - m[..., i]) / np.sqrt(si)
            g = (m[..., w] - m[..., j]) / np.sqrt(sj)
            rho = vw / np.sqrt(si * sj)
            q = np.sqrt((vw * vi + vw * vj + vi * vj) / (si * sj))
            cols.append(_bvn_cdf(h, g, rho, q))
        out = np.stack(cols, axis=-1)
    else:
        raise ValueError("exact Thompson probabilities are implemented for K <= 3; use method='mc'")
    out = np.clip(out, 0.0, 1.0)
    return out / out.sum(axis=-1, keepdims=True)


def thompson_floor_step(state: PosteriorState, t: int, cfg: DesignConfig,
                        rng: np.random.Generator | None = None) -> PropensityVector:
    """Floored Thompson propensities used to draw the arm at step ``t``."""
    if t < 1:
        raise ValueError("t is 1-based")
    k = state.num_arms
    if cfg.method == "exact":
        raw = thompson_exact_probs(state.posterior_mean, state.posterior_var)
    else:
        if rng is None:
            raise ValueError("Monte Carlo Thompson probabilities need an rng")
        raw = thompson_raw_probs(state, cfg.num_draws, rng)
    floor = float(floor_value(t, k, cfg.floor_exponent, cfg.floor_scale))
    return PropensityVector(tuple(apply_floor_array(raw, floor)), floor)


# -- two-stage and fixed designs ------------------------------------------------


def two_stage_probs(first_half_counts, first_half_sums) -> np.ndarray:
    """Second-stage (0.9, 0.1) vector favouring the better first-half arm.

    Batched over a leading axis; arms never pulled count as mean -inf and
    exact ties go to arm 0.
    """
    counts = np.asarray(first_half_counts, dtype=float)
    sums = np.asarray(first_half_sums, dtype=float)
    means = np.where(counts > 0, sums / np.where(counts > 0, counts, 1.0), -np.inf)
    arm1_wins = means[..., 1] > means[..., 0]
    return np.where(arm1_wins[..., None], [0.1, 0.9], [0.9, 0.1])


def two_stage_step(history, t: int, horizon: int) -> PropensityVector:
    """Propensities of the two-stage, two-arm design at step ``t``.

    ``history`` must contain at least the first ``horizon // 2`` steps
    whenever ``t > horizon // 2``.
    """
    if history.num_arms != 2:
        raise ValueError("the two-stage design needs exactly two arms")
    if horizon % 2:
        raise ValueError("the two-stage design needs an even horizon")
    half = horizon // 2
    if t <= half:
        return PropensityVector((0.5, 0.5))
    if len(history) < half:
        raise ValueError("first stage incomplete")
    arms = history.arms[:half]
    rewards = history.rewards[:half]
    counts = np.bincount(arms, minlength=2)
    sums = np.bincount(arms, weights=rewards, minlength=2)
    return PropensityVector(tuple(two_stage_probs(counts, sums)))


def arm_from_uniform(probs, u) -> np.ndarray:
    """Inverse-CDF draw of an arm; batched over leading axes."""
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs, axis=-1)[..., :-1]
    return (np.asarray(u)[..., None] >= cdf).sum(axis=-1)


def sample_arm(probs, rng: np.random.Generator) -> int:
    return int(arm_from_uniform(np.asarray(probs), rng.random()))
