"""Per-step unbiased scores for arm values and arm contrasts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .history import BanditHistory, StepRecord, lagged_means

Target = int | tuple[int, int]


def _propensity(record: StepRecord, arm: int) -> float:
    e = record.propensities[arm]
    if not e > 0:
        raise ValueError(f"step {record.t}: arm {arm} has zero propensity; its score is undefined")
    return e


def ipw_score(record: StepRecord, arm: int) -> float:
    e = _propensity(record, arm)
    return (1.0 / e) * record.reward if record.arm == arm else 0.0


def aipw_score(record: StepRecord, arm: int, plug_in: float) -> float:
    """IPW score plus the control variate ``(1 - 1{W=arm}/e) * plug_in``.

    ``plug_in`` must be computed from steps before ``record.t``.
    """
    e = _propensity(record, arm)
    ratio = 1.0 / e if record.arm == arm else 0.0
    return ratio * record.reward + (1.0 - ratio) * plug_in


def contrast_score(record: StepRecord, w1: int, w2: int, plug_ins) -> float:
    return aipw_score(record, w1, plug_ins[w1]) - aipw_score(record, w2, plug_ins[w2])


@dataclass(frozen=True)
class ScoreSeries:
    target: Target
    values: np.ndarray
    kind: str


def plug_in_matrix(history: BanditHistory, plug_in="running") -> np.ndarray:
    """(T, K) plug-in values.

    ``"running"`` gives lagged sample means (0 before an arm's first pull),
    ``"zero"`` reduces AIPW to IPW, and an array of K arm values (or a full
    (T, K) array) is used as given, e.g. the true means.
    """
    T, K = len(history), history.num_arms
    if isinstance(plug_in, str):
        if plug_in == "running":
            return lagged_means(history)
        if plug_in == "zero":
            return np.zeros((T, K))
        raise ValueError(f"unknown plug-in {plug_in!r}")
    return np.broadcast_to(np.asarray(plug_in, dtype=float), (T, K))


def arm_scores(history: BanditHistory, arm: int, plug_in="running") -> np.ndarray:
    """Vector of AIPW scores of ``arm`` for t = 1..T."""
    e = history.propensities[:, arm]
    if np.any(e <= 0):
        bad = int(np.argmax(e <= 0)) + 1
        raise ValueError(f"step {bad}: arm {arm} has zero propensity; its score is undefined")
    m = plug_in_matrix(history, plug_in)[:, arm]
    ratio = (history.arms == arm) / e
    return ratio * history.rewards + (1.0 - ratio) * m


def score_series(history: BanditHistory, target: Target, kind: str = "aipw",
                 plug_in="running") -> ScoreSeries:
    if kind == "ipw":
        plug_in = "zero"
    elif kind != "aipw":
        raise ValueError(f"unknown score kind {kind!r}")
    if isinstance(target, tuple):
        w1, w2 = target
        values = arm_scores(history, w1, plug_in) - arm_scores(history, w2, plug_in)
    else:
        values = arm_scores(history, target, plug_in)
    return ScoreSeries(target, values, kind)
