"""Point estimates, variance estimates and confidence intervals for arm values
and contrasts computed from a single experiment log."""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from . import confseq
from .history import BanditHistory
from .scores import ScoreSeries, Target, score_series
from .weights import WeightSchedule, build_schedule, weight_diagnostics

ESTIMATORS = (
    "sample_mean",
    "ipw",
    "aipw",
    "aw_constant",
    "aw_two_point",
    "wavg_constant",
    "wavg_two_point",
    "w_decorrelation",
    "howard_cs",
)

# estimator name -> (weight scheme, plug-in) for the adaptively-weighted family
AW_FAMILY = {
    "ipw": ("uniform", "zero"),
    "aipw": ("uniform", "running"),
    "aw_constant": ("constant_alloc", "running"),
    "aw_two_point": ("two_point_alloc", "running"),
}
WAVG_FAMILY = {"wavg_constant": "constant_alloc", "wavg_two_point": "two_point_alloc"}


@dataclass
class EstimateReport:
    """One estimator applied to one target.

    ``variance`` and ``stderr`` are None for confidence-sequence reports,
    which carry only an interval.
    """

    estimator_name: str
    target: Target
    point: float
    variance: float | None
    stderr: float | None
    ci_lo: float
    ci_hi: float
    level: float
    studentized: float | None = None
    truth: float | None = None
    source: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["target"] = list(self.target) if isinstance(self.target, tuple) else self.target
        return out


def history_digest(history: BanditHistory) -> str:
    h = hashlib.blake2b(digest_size=12)
    for arr in (history.propensities, history.arms, history.rewards):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def normal_quantile(p):
    return ndtri(p)


def normal_ci(point: float, variance: float, level: float = 0.95) -> tuple[float, float]:
    if variance < 0:
        raise ValueError("variance must be non-negative")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    half = float(normal_quantile(0.5 + level / 2.0)) * math.sqrt(variance)
    return point - half, point + half


def _report(name, target, point, variance, level, source=None, diagnostics=None) -> EstimateReport:
    lo, hi = normal_ci(point, variance, level)
    return EstimateReport(name, target, float(point), float(variance), math.sqrt(variance),
                          lo, hi, level, source=source, diagnostics=diagnostics or {})


def adaptively_weighted_estimate(scores: ScoreSeries, schedule: WeightSchedule) -> float:
    """``sum(h * scores) / sum(h)``."""
    h = np.asarray(schedule.h, dtype=float)
    g = np.asarray(scores.values, dtype=float)
    if h.shape != g.shape:
        raise ValueError("scores and weights differ in length")
    total = h.sum()
    if not total > 0:
        raise ValueError("evaluation weights are all zero")
    return float(np.dot(h, g) / total)


def variance_estimate(scores: ScoreSeries, schedule: WeightSchedule, point: float) -> float:
    """``sum(h**2 * (scores - point)**2) / sum(h)**2``."""
    h = np.asarray(schedule.h, dtype=float)
    g = np.asarray(scores.values, dtype=float)
    if h.shape != g.shape:
        raise ValueError("scores and weights differ in length")
    total = h.sum()
    if not total > 0:
        raise ValueError("evaluation weights are all zero")
    return float(np.sum(h**2 * (g - point) ** 2) / total**2)


def aw_arm_estimate(history: BanditHistory, arm: int, scheme: str = "two_point_alloc",
                    plug_in="running", level: float = 0.95, alpha: float = 0.7,
                    name: str | None = None) -> EstimateReport | None:
    """Adaptively-weighted AIPW estimate of one arm value.

    Returns None when the arm has zero propensity somewhere (scores undefined).
    """
    if np.any(history.propensities[:, arm] <= 0):
        return None
    scores = score_series(history, arm, "aipw", plug_in)
    schedule = build_schedule(history, arm, scheme, alpha)
    point = adaptively_weighted_estimate(scores, schedule)
    var = variance_estimate(scores, schedule, point)
    diag = weight_diagnostics(schedule.h, history.propensities[:, arm])
    return _report(name or f"aw[{scheme}]", arm, point, var, level,
                   history_digest(history), diag)


def contrast_estimate(report1: EstimateReport, report2: EstimateReport) -> EstimateReport:
    """Difference of two arm-value reports with summed variances."""
    if report1.source != report2.source:
        raise ValueError("reports come from different histories")
    if report1.variance is None or report2.variance is None:
        raise ValueError("contrast needs reports with variance estimates")
    if report1.estimator_name != report2.estimator_name or report1.level != report2.level:
        raise ValueError("reports differ in estimator or level")
    var = report1.variance + report2.variance
    diag = {}
    if report2.variance > 0:
        diag["variance_ratio"] = report1.variance / report2.variance
    return _report(report1.estimator_name, (report1.target, report2.target),
                   report1.point - report2.point, var, report1.level, report1.source, diag)


def sample_mean_estimate(history: BanditHistory, arm: int, level: float = 0.95) -> EstimateReport | None:
    """Arm sample mean with variance ``T_w**-2 * sum (Y - mean)**2``; None if never pulled."""
    y = history.rewards[history.arms == arm]
    if y.size == 0:
        return None
    point = float(y.mean())
    var = float(np.sum((y - point) ** 2) / y.size**2)
    return _report("sample_mean", arm, point, var, level, history_digest(history))


def weighted_average_estimate(history: BanditHistory, arm: int, schedule: WeightSchedule,
                              level: float = 0.95, name: str = "wavg") -> EstimateReport | None:
    """``sum(h * 1{W=arm}/e * Y) / sum(h * 1{W=arm}/e)``; None if the denominator is zero."""
    e = history.propensities[:, arm]
    pulled = history.arms == arm
    h = np.asarray(schedule.h, dtype=float)
    a = np.where(pulled, h / np.where(pulled, e, 1.0), 0.0)
    denom = a.sum()
    if not denom > 0:
        return None
    y = history.rewards
    point = float(np.dot(a, y) / denom)
    var = float(np.sum(a**2 * (y - point) ** 2 * pulled) / denom**2)
    return _report(name, arm, point, var, level, history_digest(history))


def default_wd_lambda(pulls: int, horizon: int) -> float:
    """Default W-decorrelation tuning: ``T_w / log(T)``."""
    return max(pulls, 1) / max(math.log(horizon), 1.0)


def w_decorrelation_estimate(history: BanditHistory, arm: int, tuning_lambda: float | None = None,
                             level: float = 0.95) -> EstimateReport | None:
    """W-decorrelated sample mean.

    ``Ybar + sum_t a_t (Y_t - Ybar)`` with
    ``a_t = 1{W_t=arm} / (1 + lam) * (lam / (1 + lam))**N_t`` and ``N_t`` the
    arm's pulls before t.  Variance: ``sum a_t**2 (Y_t - Ybar)**2``.
    """
    y = history.rewards[history.arms == arm]
    if y.size == 0:
        return None
    lam = default_wd_lambda(y.size, len(history)) if tuning_lambda is None else tuning_lambda
    if not lam > 0:
        raise ValueError("tuning lambda must be positive")
    a = wd_coefficients(y.size, lam)
    ybar = float(y.mean())
    resid = y - ybar
    point = ybar + float(np.dot(a, resid))
    var = float(np.sum(a**2 * resid**2))
    return _report("w_decorrelation", arm, point, var, level, history_digest(history),
                   {"tuning_lambda": lam})


def wd_coefficients(pulls: int, lam: float) -> np.ndarray:
    """Decorrelation coefficients for an arm's 1st, 2nd, ... pulls."""
    ratio = lam / (1.0 + lam)
    return ratio ** np.arange(pulls, dtype=float) / (1.0 + lam)


def studentize(report: EstimateReport, truth: float) -> float:
    if report.variance is None or not report.variance > 0:
        raise ValueError("studentizing needs a positive variance estimate")
    return (report.point - truth) / math.sqrt(report.variance)


def confseq_arm_interval(history: BanditHistory, arm: int, params: confseq.ConfSeqParams,
                         level: float = 0.95) -> EstimateReport:
    """Confidence-sequence interval for one arm at the end of the log."""
    state = confseq.confseq_process(history.rewards[history.arms == arm], params.first_prediction)
    lo, hi = confseq.confseq_interval(state, params, level)
    point = state.running_mean if state.count else float("nan")
    return EstimateReport("howard_cs", arm, point, None, None, lo, hi, level,
                          source=history_digest(history),
                          diagnostics={"count": state.count,
                                       "variance_process": state.variance_process})


def estimate(history: BanditHistory, estimator: str, target: Target, level: float = 0.95,
             alpha: float = 0.7, wd_lambda: float | None = None,
             cs_params: confseq.ConfSeqParams | None = None) -> EstimateReport | None:
    """Dispatch by estimator name; ``target`` is an arm or a pair ``(w1, w2)``
    meaning ``Q(w1) - Q(w2)``.  Returns None for undefined estimates."""
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    if isinstance(target, (tuple, list)):
        w1, w2 = (int(w) for w in target)
        for w in (w1, w2):
            if not 0 <= w < history.num_arms:
                raise ValueError(f"arm {w} out of range")
        if estimator == "howard_cs":
            # per-arm intervals at `level` combine to 2*level - 1 by the union bound
            r1 = estimate(history, estimator, w1, level, cs_params=cs_params)
            r2 = estimate(history, estimator, w2, level, cs_params=cs_params)
            lo, hi = confseq.contrast_union_interval((r2.ci_lo, r2.ci_hi), (r1.ci_lo, r1.ci_hi))
            return EstimateReport("howard_cs", (w1, w2), r1.point - r2.point, None, None,
                                  lo, hi, 2 * level - 1, source=r1.source)
        r1 = estimate(history, estimator, w1, level, alpha, wd_lambda, cs_params)
        r2 = estimate(history, estimator, w2, level, alpha, wd_lambda, cs_params)
        if r1 is None or r2 is None:
            return None
        return contrast_estimate(r1, r2)

    arm = int(target)
    if not 0 <= arm < history.num_arms:
        raise ValueError(f"arm {arm} out of range")
    if estimator == "sample_mean":
        return sample_mean_estimate(history, arm, level)
    if estimator in AW_FAMILY:
        scheme, plug_in = AW_FAMILY[estimator]
        return aw_arm_estimate(history, arm, scheme, plug_in, level, alpha, estimator)
    if estimator in WAVG_FAMILY:
        if np.any(history.propensities[:, arm] <= 0):
            return None
        schedule = build_schedule(history, arm, WAVG_FAMILY[estimator], alpha)
        return weighted_average_estimate(history, arm, schedule, level, estimator)
    if estimator == "w_decorrelation":
        return w_decorrelation_estimate(history, arm, wd_lambda, level)
    if cs_params is None:
        raise ValueError("howard_cs needs confidence-sequence parameters")
    return confseq_arm_interval(history, arm, cs_params, level)
