"""Stationary reward models for the simulated arms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

SETTINGS = ("no_signal", "low_signal", "high_signal", "intro_normal")


@dataclass(frozen=True)
class ArmOutcomeModel:
    """Arm means plus a zero-mean noise law shared by all arms.

    ``noise`` is ``"uniform"`` (``scale`` is the half width) or ``"normal"``
    (``scale`` is the standard deviation).
    """

    arm_means: tuple[float, ...]
    noise: str = "uniform"
    scale: float = 1.0

    def __post_init__(self):
        means = tuple(float(m) for m in self.arm_means)
        if not means:
            raise ValueError("need at least one arm")
        if not all(np.isfinite(means)):
            raise ValueError(f"arm means must be finite, got {means}")
        if self.noise not in ("uniform", "normal"):
            raise ValueError(f"unknown noise law {self.noise!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be non-negative")
        object.__setattr__(self, "arm_means", means)

    @property
    def num_arms(self) -> int:
        return len(self.arm_means)

    @property
    def noise_variance(self) -> float:
        if self.noise == "uniform":
            return self.scale**2 / 3.0
        return self.scale**2

    @property
    def support_bounds(self) -> tuple[tuple[float, float], ...] | None:
        """Per-arm reward support; None for unbounded (normal) noise."""
        if self.noise != "uniform":
            return None
        return tuple((m - self.scale, m + self.scale) for m in self.arm_means)

    @property
    def support_width(self) -> float | None:
        return 2.0 * self.scale if self.noise == "uniform" else None

    def reward_from_uniform(self, arms, u):
        """Map arm indices and Uniform(0, 1) draws to rewards (vectorized)."""
        arms = np.asarray(arms)
        if np.any((arms < 0) | (arms >= self.num_arms)):
            raise IndexError(f"arm index out of range for {self.num_arms} arms")
        means = np.asarray(self.arm_means)[arms]
        u = np.asarray(u, dtype=float)
        if self.noise == "uniform":
            return means + self.scale * (2.0 * u - 1.0)
        return means + self.scale * ndtri(u)


def make_setting(name: str) -> ArmOutcomeModel:
    """Named reward model.

    The three K=3 settings use additive uniform[-1, 1] noise with arm values
    1, 0.9 + 0.1w and 0.5 + 0.5w (w = 1, 2, 3). ``intro_normal`` is the
    two-arm N(0, 1) example used for the two-stage design.
    """
    if name == "no_signal":
        return ArmOutcomeModel((1.0, 1.0, 1.0), "uniform", 1.0)
    if name == "low_signal":
        return ArmOutcomeModel((1.0, 1.1, 1.2), "uniform", 1.0)
    if name == "high_signal":
        return ArmOutcomeModel((1.0, 1.5, 2.0), "uniform", 1.0)
    if name == "intro_normal":
        return ArmOutcomeModel((0.0, 0.0), "normal", 1.0)
    raise ValueError(f"unknown setting {name!r}; expected one of {SETTINGS}")


def draw_reward(model: ArmOutcomeModel, arm: int, rng: np.random.Generator) -> float:
    """Reward of ``arm`` using one uniform draw from ``rng``."""
    if not 0 <= arm < model.num_arms:
        raise IndexError(f"arm {arm} out of range for {model.num_arms} arms")
    return float(model.reward_from_uniform(arm, rng.random()))
