"""Experiment logs and running per-arm statistics."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np

LOG_FORMAT = "adaptive-inference-log"
LOG_VERSION = 1
SUM_TOL = 1e-12


class LogFormatError(ValueError):
    """Malformed experiment log; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class StepRecord:
    t: int
    propensities: tuple[float, ...]
    arm: int
    reward: float


def check_propensities(probs, arm: int | None = None) -> str | None:
    """Return a description of what is wrong with ``probs``, or None."""
    try:
        p = np.asarray(probs, dtype=float)
    except (TypeError, ValueError):
        return "propensities must be numbers"
    if p.ndim != 1 or p.size == 0:
        return "propensity vector must be a non-empty list"
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        return "propensities must be finite and non-negative"
    if abs(p.sum() - 1.0) > SUM_TOL:
        return f"propensities sum to {p.sum()!r}, not 1"
    if arm is not None:
        if not 0 <= arm < p.size:
            return f"arm {arm} out of range for {p.size} arms"
        if p[arm] <= 0:
            return f"chosen arm {arm} has zero propensity"
    return None


class BanditHistory:
    """Ordered log of (propensity vector, chosen arm, reward), stored columnwise.

    ``propensities`` has shape (T, K); ``arms`` and ``rewards`` shape (T,).
    Step ``t`` (1-based) lives at row ``t - 1``.
    """

    def __init__(self, propensities, arms, rewards, num_arms: int | None = None,
                 horizon: int | None = None, validate: bool = True):
        e = np.asarray(propensities, dtype=float)
        if num_arms is None:
            if e.ndim != 2:
                raise ValueError("cannot infer the number of arms from an empty log")
            num_arms = e.shape[1]
        e = e.reshape(-1, num_arms)
        w = np.asarray(arms, dtype=np.int64).reshape(-1)
        y = np.asarray(rewards, dtype=float).reshape(-1)
        if not (len(e) == len(w) == len(y)):
            raise ValueError("propensities, arms and rewards differ in length")
        if validate:
            for i in range(len(w)):
                problem = check_propensities(e[i], int(w[i]))
                if problem:
                    raise ValueError(f"step {i + 1}: {problem}")
        self.propensities = e
        self.arms = w
        self.rewards = y
        self.num_arms = int(num_arms)
        self.horizon = int(len(w) if horizon is None else horizon)
        for arr in (self.propensities, self.arms, self.rewards):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.arms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BanditHistory):
            return NotImplemented
        return (self.num_arms == other.num_arms and self.horizon == other.horizon
                and np.array_equal(self.propensities, other.propensities)
                and np.array_equal(self.arms, other.arms)
                and np.array_equal(self.rewards, other.rewards))

    def __repr__(self) -> str:
        return f"BanditHistory(num_arms={self.num_arms}, steps={len(self)}, horizon={self.horizon})"

    @property
    def steps(self) -> Iterator[StepRecord]:
        for i in range(len(self)):
            yield self.record(i + 1)

    def record(self, t: int) -> StepRecord:
        i = t - 1
        return StepRecord(t, tuple(self.propensities[i].tolist()), int(self.arms[i]),
                          float(self.rewards[i]))

    def pull_counts(self) -> np.ndarray:
        return np.bincount(self.arms, minlength=self.num_arms)

    def prefix(self, t: int) -> "BanditHistory":
        """First ``t`` steps, keeping the planned horizon."""
        return BanditHistory(self.propensities[:t], self.arms[:t], self.rewards[:t],
                             self.num_arms, self.horizon, validate=False)

    def scaled(self, scale: float = 1.0, shift: float = 0.0) -> "BanditHistory":
        """Copy with rewards mapped to ``scale * y + shift``."""
        return BanditHistory(self.propensities, self.arms, scale * self.rewards + shift,
                             self.num_arms, self.horizon, validate=False)


class RunningArmStats:
    """Per-arm count, mean and sum of squared deviations (Welford updates).

    Reading the mean before calling ``update`` with step ``t`` gives the
    plug-in based on steps ``1..t-1`` only.
    """

    def __init__(self, num_arms: int):
        self.count = np.zeros(num_arms, dtype=np.int64)
        self.mean = np.zeros(num_arms)
        self.sum_sq_dev = np.zeros(num_arms)

    def update(self, arm: int, reward: float) -> None:
        self.count[arm] += 1
        delta = reward - self.mean[arm]
        self.mean[arm] += delta / self.count[arm]
        self.sum_sq_dev[arm] += delta * (reward - self.mean[arm])

    def lagged_mean(self, arm: int) -> float:
        return lagged_mean(self, arm)


def lagged_mean(stats: RunningArmStats, arm: int) -> float:
    """Sample mean of ``arm`` so far; 0 when it has never been pulled."""
    return float(stats.mean[arm]) if stats.count[arm] > 0 else 0.0


def lagged_means(history: BanditHistory) -> np.ndarray:
    """Row ``t-1`` holds every arm's sample mean over steps ``1..t-1`` (0 if unpulled)."""
    T, K = len(history), history.num_arms
    onehot = np.zeros((T, K))
    onehot[np.arange(T), history.arms] = 1.0
    counts = np.zeros((T, K))
    sums = np.zeros((T, K))
    counts[1:] = np.cumsum(onehot, axis=0)[:-1]
    sums[1:] = np.cumsum(onehot * history.rewards[:, None], axis=0)[:-1]
    return np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)


# -- JSONL log format -----------------------------------------------------------


def write_log(history: BanditHistory, stream: IO[str] | None = None) -> str | None:
    """Write ``history`` as JSON lines.

    Line 1 is a header object; each following line is ``{"t", "e", "w", "y"}``.
    Floats use Python's shortest round-trip repr, so reading back is exact.
    Returns the text when ``stream`` is None.
    """
    out = io.StringIO() if stream is None else stream
    header = {"format": LOG_FORMAT, "version": LOG_VERSION,
              "num_arms": history.num_arms, "horizon": history.horizon}
    out.write(json.dumps(header) + "\n")
    for i in range(len(history)):
        row = {"t": i + 1, "e": history.propensities[i].tolist(),
               "w": int(history.arms[i]), "y": float(history.rewards[i])}
        out.write(json.dumps(row) + "\n")
    return out.getvalue() if stream is None else None


def read_log(stream: IO[str] | str) -> BanditHistory:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = iter(enumerate(stream, start=1))
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise LogFormatError(1, "empty log (missing header)") from None
    try:
        header = json.loads(first)
    except json.JSONDecodeError as exc:
        raise LogFormatError(lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(header, dict) or header.get("format") != LOG_FORMAT:
        raise LogFormatError(lineno, "missing or unrecognized header")
    try:
        num_arms = int(header["num_arms"])
        horizon = int(header["horizon"])
    except (KeyError, TypeError, ValueError):
        raise LogFormatError(lineno, "header needs integer num_arms and horizon") from None

    props, arms, rewards = [], [], []
    for lineno, line in lines:
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(row, dict) or not {"t", "e", "w", "y"} <= row.keys():
            raise LogFormatError(lineno, "record needs keys t, e, w, y")
        e, w, y, t = row["e"], row["w"], row["y"], row["t"]
        if not isinstance(w, int) or isinstance(w, bool) or not isinstance(t, int):
            raise LogFormatError(lineno, "t and w must be integers")
        if t != len(arms) + 1:
            raise LogFormatError(lineno, f"expected t={len(arms) + 1}, got {t}")
        if not isinstance(e, list) or len(e) != num_arms:
            raise LogFormatError(lineno, f"propensity vector must have {num_arms} entries")
        if not isinstance(y, (int, float)) or isinstance(y, bool) or not np.isfinite(y):
            raise LogFormatError(lineno, "reward must be a finite number")
        problem = check_propensities(e, w)
        if problem:
            raise LogFormatError(lineno, problem)
        props.append(e)
        arms.append(w)
        rewards.append(float(y))
    return BanditHistory(np.array(props, dtype=float).reshape(-1, num_arms), arms, rewards,
                         num_arms, horizon, validate=False)
