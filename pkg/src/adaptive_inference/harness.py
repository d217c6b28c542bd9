"""Monte Carlo replication harness: configuration, per-replication runs,
mergeable aggregation and figure-data reproduction."""
from __future__ import annotations

import csv
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import kstest

from . import rng as rngmod
from .confseq import ConfSeqParams, tuned_v_opt
from .designs import DesignConfig, parse_design
from .environment import ArmOutcomeModel, make_setting
from .estimators import AW_FAMILY, ESTIMATORS, estimate, normal_quantile
from .history import BanditHistory, write_log
from .simulate import BatchResult, EngineSpec, run_batch

HIST_EDGES = np.linspace(-5.0, 5.0, 51)
# standard deviation of the limiting Kolmogorov distribution; sd of sqrt(n) * KS under the null
_KOLMOGOROV_SD = 0.2603


# -- configuration -----------------------------------------------------------


def parse_target(text) -> int | tuple[int, int]:
    """``"2"`` -> arm 2; ``"2-0"`` -> contrast Q(2) - Q(0) (0-based arms)."""
    if isinstance(text, (int, np.integer)):
        return int(text)
    if isinstance(text, (tuple, list)):
        w1, w2 = text
        return int(w1), int(w2)
    parts = str(text).strip().split("-")
    try:
        if len(parts) == 1:
            return int(parts[0])
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ValueError(f"cannot parse target {text!r}; use 'w' or 'w1-w2'")


def format_target(target) -> str:
    return f"{target[0]}-{target[1]}" if isinstance(target, tuple) else str(target)


@dataclass
class SimulationConfig:
    """Everything needed to reproduce one simulation study.

    Either ``setting`` names a built-in reward model or ``arm_means`` (with
    ``noise`` and ``noise_scale``) gives one explicitly.  ``design`` is
    ``thompson_floor``, ``two_stage`` or ``fixed:p1,...``.  Targets are
    strings: ``"2"`` for an arm, ``"2-0"`` for the contrast of arm 2 over
    arm 0.
    """

    setting: str | None = "no_signal"
    arm_means: tuple[float, ...] | None = None
    noise: str = "uniform"
    noise_scale: float = 1.0
    design: str = "thompson_floor"
    floor_exponent: float = 0.7
    floor_scale: float = 1.0
    num_draws: int = 10_000
    thompson_method: str = "mc"
    likelihood_var: float = 1.0
    batch_size: int = 1
    horizon: int = 10_000
    estimators: tuple[str, ...] = ("sample_mean", "aipw", "aw_constant", "aw_two_point")
    targets: tuple[str, ...] = ("2-0",)
    replications: int = 1000
    seed: int = 0
    level: float = 0.95
    alpha: float = 0.7
    wd_lambda: float | None = None
    cs_v_opt: float | None = None
    cs_first_prediction: float = 0.0
    out: str | None = None
    workers: int = 1
    chunk_size: int = 2000

    def __post_init__(self):
        self.estimators = tuple(self.estimators)
        self.targets = tuple(format_target(parse_target(t)) for t in self.targets)
        if self.arm_means is not None:
            self.arm_means = tuple(float(m) for m in self.arm_means)
        self.validate()

    def validate(self):
        if self.replications < 1 or self.horizon < 1:
            raise ValueError("replications and horizon must be >= 1")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ValueError(f"unknown estimator {name!r}; expected one of {ESTIMATORS}")
        k = self.model().num_arms
        for text in self.targets:
            target = parse_target(text)
            arms = target if isinstance(target, tuple) else (target,)
            if any(not 0 <= w < k for w in arms):
                raise ValueError(f"target {text!r} refers to an arm outside 0..{k - 1}")
        self.engine_spec()

    @classmethod
    def from_mapping(cls, data: dict) -> "SimulationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("estimators", "targets"):
            if isinstance(data.get(key), str):
                data[key] = [s.strip() for s in data[key].split(",") if s.strip()]
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SimulationConfig":
        """Read a flat YAML key/value file."""
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a flat key/value document")
        return cls.from_mapping(data)

    def with_overrides(self, **overrides) -> "SimulationConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)

    def model(self) -> ArmOutcomeModel:
        if self.arm_means is not None:
            return ArmOutcomeModel(self.arm_means, self.noise, self.noise_scale)
        if self.setting is None:
            raise ValueError("config needs a setting or explicit arm_means")
        return make_setting(self.setting)

    def design_config(self) -> DesignConfig:
        return parse_design(self.design, floor_exponent=self.floor_exponent,
                            floor_scale=self.floor_scale, num_draws=self.num_draws,
                            method=self.thompson_method, likelihood_var=self.likelihood_var,
                            batch_size=self.batch_size)

    def cs_params(self) -> ConfSeqParams:
        model = self.model()
        v_opt = self.cs_v_opt
        if v_opt is None:
            v_opt = tuned_v_opt(model.noise_variance, self.horizon, model.num_arms, self.floor_exponent)
        width = model.support_width
        return ConfSeqParams(c=width if width else 2.0, v_opt=v_opt,
                             first_prediction=self.cs_first_prediction)

    def parsed_targets(self) -> list:
        return [parse_target(t) for t in self.targets]

    def truth(self, target) -> float:
        q = self.model().arm_means
        if isinstance(target, tuple):
            return q[target[0]] - q[target[1]]
        return q[target]

    def engine_spec(self, keep_histories: bool = False, lambda_path: bool = False) -> EngineSpec:
        return EngineSpec(self.model(), self.design_config(), self.horizon, self.estimators,
                          self.level, self.alpha, self.wd_lambda, self.cs_params(),
                          keep_histories, lambda_path)


# -- single replication --------------------------------------------------------


@dataclass
class ReplicationResult:
    index: int
    seed: int
    reports: list
    history: BanditHistory


def run_replication(config: SimulationConfig, index: int, log_path=None) -> ReplicationResult:
    """Run replication ``index`` and evaluate every estimator on its log.

    Missing (undefined) estimates are left out of ``reports``.  The log is
    written to ``log_path`` when given.
    """
    seed = rngmod.replication_seed(config.seed, index)
    batch = run_batch(config.engine_spec(keep_histories=True), seed)
    history = batch.histories[0]
    cs = config.cs_params()
    reports = []
    for name in config.estimators:
        for target in config.parsed_targets():
            rep = estimate(history, name, target, config.level, config.alpha,
                           config.wd_lambda, cs)
            if rep is not None:
                rep.truth = config.truth(target)
                if rep.variance:
                    rep.studentized = (rep.point - rep.truth) / rep.stderr
                reports.append(rep)
    if log_path is not None:
        with open(log_path, "w") as fh:
            write_log(history, fh)
    return ReplicationResult(index, int(np.ravel(seed)[0]), reports, history)


# -- aggregation --------------------------------------------------------------


@dataclass
class AggregateStats:
    """Cross-replication summary of one (estimator, target) cell.

    Only power sums, counts and fixed-bin histograms are stored (plus the
    studentized values, needed for the KS distance), so merging two
    batches is exact up to floating-point summation order.
    """

    estimator: str
    target: str
    truth: float
    level: float
    n_total: int = 0
    n_defined: int = 0
    err_sums: np.ndarray = field(default_factory=lambda: np.zeros(4))
    n_intervals: int = 0
    covered: int = 0
    width_sum: float = 0.0
    width_sq_sum: float = 0.0
    hist: np.ndarray = field(default_factory=lambda: np.zeros(len(HIST_EDGES) + 1, dtype=np.int64))
    studentized: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diag_sums: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, estimator, target, truth, level, point, lo=None, hi=None,
                    variance=None, diagnostics=None) -> "AggregateStats":
        point = np.asarray(point, dtype=float)
        defined = np.isfinite(point)
        err = point[defined] - truth
        out = cls(estimator, target, float(truth), level, n_total=len(point),
                  n_defined=int(defined.sum()),
                  err_sums=np.array([np.sum(err**p) for p in (1, 2, 3, 4)]))
        if lo is not None:
            lo = np.asarray(lo, dtype=float)[defined]
            hi = np.asarray(hi, dtype=float)[defined]
            out.n_intervals = len(lo)
            out.covered = int(np.sum((lo <= truth) & (truth <= hi)))
            width = hi - lo
            out.width_sum = float(width.sum())
            out.width_sq_sum = float(np.sum(width**2))
        if variance is not None:
            var = np.asarray(variance, dtype=float)[defined]
            ok = var > 0
            z = err[ok] / np.sqrt(var[ok])
            out.studentized = z
            inner = np.histogram(z, HIST_EDGES)[0]
            out.hist = np.concatenate([[np.sum(z < HIST_EDGES[0])], inner,
                                       [np.sum(z > HIST_EDGES[-1])]]).astype(np.int64)
        for name, values in (diagnostics or {}).items():
            v = np.asarray(values, dtype=float)[defined]
            v = v[np.isfinite(v)]
            out.diag_sums[name] = (float(v.sum()), len(v))
        return out

    def merge(self, other: "AggregateStats") -> "AggregateStats":
        if (self.estimator, self.target) != (other.estimator, other.target):
            raise ValueError("cannot merge different cells")
        diag = dict(self.diag_sums)
        for k, (s, n) in other.diag_sums.items():
            s0, n0 = diag.get(k, (0.0, 0))
            diag[k] = (s0 + s, n0 + n)
        return AggregateStats(
            self.estimator, self.target, self.truth, self.level,
            self.n_total + other.n_total, self.n_defined + other.n_defined,
            self.err_sums + other.err_sums, self.n_intervals + other.n_intervals,
            self.covered + other.covered, self.width_sum + other.width_sum,
            self.width_sq_sum + other.width_sq_sum, self.hist + other.hist,
            np.concatenate([self.studentized, other.studentized]), diag)

    def _need(self):
        if self.n_defined == 0:
            raise ValueError(f"no defined estimates for {self.estimator} / {self.target}")

    @property
    def mean_point(self) -> float:
        return self.truth + self.bias

    @property
    def bias(self) -> float:
        self._need()
        return self.err_sums[0] / self.n_defined

    @property
    def error_var(self) -> float:
        """Sample variance of the estimation errors."""
        n = self.n_defined
        if n < 2:
            return float("nan")
        return max(self.err_sums[1] - n * self.bias**2, 0.0) / (n - 1)

    @property
    def bias_se(self) -> float:
        return math.sqrt(self.error_var / self.n_defined)

    @property
    def rmse(self) -> float:
        self._need()
        return math.sqrt(self.err_sums[1] / self.n_defined)

    @property
    def rmse_se(self) -> float:
        n = self.n_defined
        mse = self.err_sums[1] / n
        var_sq = max(self.err_sums[3] / n - mse**2, 0.0)
        return math.sqrt(var_sq / n) / (2.0 * math.sqrt(mse)) if mse > 0 else 0.0

    @property
    def excess_kurtosis(self) -> float:
        n = self.n_defined
        s1, s2, s3, s4 = self.err_sums / n
        m2 = s2 - s1**2
        m4 = s4 - 4 * s1 * s3 + 6 * s1**2 * s2 - 3 * s1**4
        return m4 / m2**2 - 3.0 if m2 > 0 else float("nan")

    @property
    def coverage(self) -> float:
        return self.covered / self.n_intervals if self.n_intervals else float("nan")

    @property
    def coverage_se(self) -> float:
        p = self.coverage
        return math.sqrt(p * (1 - p) / self.n_intervals) if self.n_intervals else float("nan")

    @property
    def mean_width(self) -> float:
        return self.width_sum / self.n_intervals if self.n_intervals else float("nan")

    @property
    def width_se(self) -> float:
        n = self.n_intervals
        if n < 2:
            return float("nan")
        var = max(self.width_sq_sum - n * self.mean_width**2, 0.0) / (n - 1)
        return math.sqrt(var / n)

    @property
    def ks(self) -> float:
        if len(self.studentized) == 0:
            return float("nan")
        return float(kstest(self.studentized, "norm").statistic)

    @property
    def ks_se(self) -> float:
        n = len(self.studentized)
        return _KOLMOGOROV_SD / math.sqrt(n) if n else float("nan")

    def diagnostic_means(self) -> dict:
        return {k: s / n for k, (s, n) in self.diag_sums.items() if n}

    def summary(self) -> dict:
        row = {
            "estimator": self.estimator, "target": self.target, "truth": self.truth,
            "n_total": self.n_total, "n_defined": self.n_defined,
            "bias": self.bias, "bias_se": self.bias_se,
            "rmse": self.rmse, "rmse_se": self.rmse_se,
            "excess_kurtosis": self.excess_kurtosis,
            "coverage": self.coverage, "coverage_se": self.coverage_se,
            "mean_width": self.mean_width, "width_se": self.width_se,
            "ks": self.ks, "ks_se": self.ks_se,
        }
        row.update({f"diag_{k}": v for k, v in sorted(self.diagnostic_means().items())})
        return row


def aggregate(reports, truths: dict | None = None) -> dict:
    """Aggregate EstimateReport objects into AggregateStats per (estimator, target).

    ``truths`` maps target -> true value and overrides ``report.truth``.
    """
    cells: dict = {}
    for rep in reports:
        if rep is None:
            continue
        cells.setdefault((rep.estimator_name, rep.target), []).append(rep)
    if not cells:
        raise ValueError("no reports to aggregate")
    out = {}
    for (name, target), reps in cells.items():
        truth = (truths or {}).get(target, reps[0].truth)
        if truth is None:
            raise ValueError(f"no truth for target {target!r}")
        var = None if reps[0].variance is None else [r.variance for r in reps]
        out[(name, format_target(target))] = AggregateStats.from_arrays(
            name, format_target(target), truth, reps[0].level,
            [r.point for r in reps], [r.ci_lo for r in reps], [r.ci_hi for r in reps], var)
    return out


# -- batch runs -----------------------------------------------------------------


def target_arrays(batch: BatchResult, estimator: str, target, level: float) -> dict:
    """Per-replication point/variance/interval arrays for an arm or contrast."""
    if not isinstance(target, tuple):
        cell = batch.cells[(estimator, target)]
        return {"point": cell["point"], "variance": cell["variance"],
                "lo": cell["lo"], "hi": cell["hi"], "level": level}
    c1 = batch.cells[(estimator, target[0])]
    c2 = batch.cells[(estimator, target[1])]
    point = c1["point"] - c2["point"]
    if estimator == "howard_cs":
        return {"point": point, "variance": None, "lo": c1["lo"] - c2["hi"],
                "hi": c1["hi"] - c2["lo"], "level": 2 * level - 1}
    var = c1["variance"] + c2["variance"]
    half = float(normal_quantile(0.5 + level / 2.0)) * np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = c1["variance"] / c2["variance"]
    return {"point": point, "variance": var, "lo": point - half, "hi": point + half,
            "level": level, "variance_ratio": ratio}


def _cell_diagnostics(batch: BatchResult, estimator: str, target, arrays: dict) -> dict:
    diag = {}
    if "variance_ratio" in arrays:
        with np.errstate(divide="ignore", invalid="ignore"):
            diag["variance_ratio"] = arrays["variance_ratio"]
    scheme = AW_FAMILY.get(estimator, (None,))[0]
    if scheme in batch.diagnostics:
        arms = target if isinstance(target, tuple) else (target,)
        for key, values in batch.diagnostics[scheme].items():
            for w in arms:
                diag[f"{key}_arm{w}"] = values[:, w]
    return diag


@dataclass
class ChunkOutput:
    stats: dict
    replications: int
    pulls_sum: np.ndarray
    lambda_path_sum: np.ndarray | None = None
    per_replication: dict | None = None


def run_chunk(config: SimulationConfig, start: int, stop: int, keep_points: bool = False,
              lambda_path: bool = False) -> ChunkOutput:
    """Run replications ``start .. stop-1`` and aggregate them."""
    seeds = rngmod.replication_seed(config.seed, np.arange(start, stop))
    batch = run_batch(config.engine_spec(lambda_path=lambda_path), seeds)
    stats, per_rep = {}, {}
    for name in config.estimators:
        for target in config.parsed_targets():
            arr = target_arrays(batch, name, target, config.level)
            with np.errstate(divide="ignore", invalid="ignore"):
                diag = _cell_diagnostics(batch, name, target, arr)
            key = (name, format_target(target))
            stats[key] = AggregateStats.from_arrays(
                name, key[1], config.truth(target), arr["level"], arr["point"],
                arr["lo"], arr["hi"], arr["variance"], diag)
            if keep_points:
                per_rep[key] = {k: arr[k] for k in ("point", "variance", "lo", "hi")}
    return ChunkOutput(stats, stop - start, batch.pulls.sum(axis=0).astype(float),
                       batch.lambda_path_sum, per_rep if keep_points else None)


def _run_chunk_args(args):
    return run_chunk(*args)


def _merge_chunks(chunks: list[ChunkOutput]) -> ChunkOutput:
    first = chunks[0]
    stats = dict(first.stats)
    pulls = first.pulls_sum.copy()
    lam = None if first.lambda_path_sum is None else first.lambda_path_sum.copy()
    per_rep = None if first.per_replication is None else {
        k: {f: [v] for f, v in d.items()} for k, d in first.per_replication.items()}
    for ch in chunks[1:]:
        for key, st in ch.stats.items():
            stats[key] = stats[key].merge(st)
        pulls += ch.pulls_sum
        if lam is not None:
            lam += ch.lambda_path_sum
        if per_rep is not None:
            for k, d in ch.per_replication.items():
                for f, v in d.items():
                    per_rep[k][f].append(v)
    if per_rep is not None:
        per_rep = {k: {f: (None if v[0] is None else np.concatenate(v)) for f, v in d.items()}
                   for k, d in per_rep.items()}
    return ChunkOutput(stats, sum(c.replications for c in chunks), pulls, lam, per_rep)


@dataclass
class SimulationResult:
    config: SimulationConfig
    stats: dict
    mean_pulls: np.ndarray
    wall_time: float
    lambda_path: np.ndarray | None = None
    per_replication: dict | None = None

    def cell(self, estimator: str, target) -> AggregateStats:
        return self.stats[(estimator, format_target(parse_target(target)))]

    def summary_rows(self) -> list[dict]:
        return [self.stats[k].summary() for k in sorted(self.stats)]


def run_simulation(config: SimulationConfig, keep_points: bool = False,
                   lambda_path: bool = False) -> SimulationResult:
    """Run all replications in chunks, optionally in worker processes.

    Chunks are merged in index order, so results do not depend on ``workers``.
    """
    t0 = time.perf_counter()
    bounds = [(s, min(s + config.chunk_size, config.replications))
              for s in range(0, config.replications, config.chunk_size)]
    args = [(config, s, e, keep_points, lambda_path) for s, e in bounds]
    if config.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_chunk_args, args))
    else:
        chunks = [run_chunk(*a) for a in args]
    merged = _merge_chunks(chunks)
    lam = None
    if merged.lambda_path_sum is not None:
        lam = merged.lambda_path_sum / merged.replications
    return SimulationResult(config, merged.stats, merged.pulls_sum / merged.replications,
                            time.perf_counter() - t0, lam, merged.per_replication)


# -- output files -----------------------------------------------------------------


def git_hash() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


def write_csv(path, rows: list[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def histogram_rows(stats: AggregateStats, **extra) -> list[dict]:
    lo = np.concatenate([[-np.inf], HIST_EDGES])
    hi = np.concatenate([HIST_EDGES, [np.inf]])
    return [dict(extra, estimator=stats.estimator, target=stats.target,
                 bin_lo=float(a), bin_hi=float(b), count=int(c))
            for a, b, c in zip(lo, hi, stats.hist)]


def write_manifest(path, configs, wall_time: float, extra: dict | None = None):
    manifest = {
        "configs": [c.to_dict() for c in configs],
        "replication_seeds": "splitmix64(splitmix64(seed) ^ index) for index in 0..replications-1",
        "git_hash": git_hash(),
        "wall_time_seconds": wall_time,
    }
    manifest.update(extra or {})
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)


def write_simulation(result: SimulationResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary, hist = out / "summary.csv", out / "histograms.csv"
    write_csv(summary, result.summary_rows())
    rows = []
    for key in sorted(result.stats):
        rows += histogram_rows(result.stats[key])
    write_csv(hist, rows)
    manifest = out / "manifest.json"
    write_manifest(manifest, [result.config], result.wall_time,
                   {"mean_pulls": result.mean_pulls.tolist()})
    return [summary, hist, manifest]


# -- figure data --------------------------------------------------------------------

FIGURES = ("fig1_intro", "fig2_contrast_evolution", "fig3_histograms", "fig4_arm_values",
           "appx_lambda_path")
K3_SETTINGS = ("no_signal", "low_signal", "high_signal")
SCALES = {"desk": (10_000, 10_000), "paper": (100_000, 100_000)}
_MAIN_ESTIMATORS = ("sample_mean", "aipw", "aw_constant", "aw_two_point")


def _horizon_grid(T: int) -> list[int]:
    grid = sorted({max(2, int(round(T * f))) for f in (0.1, 0.25, 0.5, 1.0)})
    return [t + (t % 2) for t in grid]


def figure_configs(figure_id: str, scale: str = "desk", replications: int | None = None,
                   horizon: int | None = None, seed: int = 0, workers: int = 1) -> list:
    """Simulation configs behind one figure."""
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; expected one of {FIGURES}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {tuple(SCALES)}")
    T, R = SCALES[scale]
    T, R = horizon or T, replications or R
    common = dict(replications=R, seed=seed, workers=workers, thompson_method="exact")
    if figure_id == "fig1_intro":
        return [SimulationConfig(setting="intro_normal", design="two_stage", horizon=T + T % 2,
                                 estimators=("sample_mean", "ipw", "aw_constant"),
                                 targets=("0",), **common)]
    if figure_id == "fig2_contrast_evolution":
        return [SimulationConfig(setting=s, horizon=t, targets=("2-0",),
                                 estimators=_MAIN_ESTIMATORS + ("w_decorrelation", "howard_cs"),
                                 **common)
                for s in K3_SETTINGS for t in _horizon_grid(T)]
    if figure_id == "fig3_histograms":
        return [SimulationConfig(setting=s, horizon=T, targets=("2-0",),
                                 estimators=_MAIN_ESTIMATORS, **common) for s in K3_SETTINGS]
    if figure_id == "fig4_arm_values":
        return [SimulationConfig(setting=s, horizon=T, targets=("0", "1", "2"),
                                 estimators=_MAIN_ESTIMATORS + ("w_decorrelation", "howard_cs"),
                                 **common) for s in K3_SETTINGS]
    return [SimulationConfig(setting="high_signal", horizon=T, targets=("0", "2"),
                             estimators=("aw_two_point",), **common)]


def replicate_figure(figure_id: str, scale: str = "desk", out=".", replications: int | None = None,
                     horizon: int | None = None, seed: int = 0, workers: int = 1) -> list[Path]:
    """Write the tidy CSV (and manifest) needed to redraw one figure."""
    configs = figure_configs(figure_id, scale, replications, horizon, seed, workers)
    out = Path(out)
    t0 = time.perf_counter()
    rows = []
    for cfg in configs:
        if figure_id == "fig1_intro":
            res = run_simulation(cfg, keep_points=True)
            scale_factor = math.sqrt(cfg.horizon)
            for name in cfg.estimators:
                points = res.per_replication[(name, "0")]["point"]
                rows += [{"estimator": name, "replication": i, "scaled_estimate": scale_factor * p}
                         for i, p in enumerate(points)]
        elif figure_id == "appx_lambda_path":
            res = run_simulation(cfg, lambda_path=True)
            arms = {"bad": 0, "good": cfg.model().num_arms - 1}
            for label, w in arms.items():
                rows += [{"arm": label, "t": t + 1, "scaled_allocation": float(v)}
                         for t, v in enumerate(res.lambda_path[:, w])]
        elif figure_id == "fig3_histograms":
            res = run_simulation(cfg)
            for key in sorted(res.stats):
                rows += histogram_rows(res.stats[key], setting=cfg.setting)
        else:
            res = run_simulation(cfg)
            rows += [dict(row, setting=cfg.setting, horizon=cfg.horizon)
                     for row in res.summary_rows()]
    csv_path = out / f"{figure_id}.csv"
    write_csv(csv_path, rows)
    manifest = out / f"{figure_id}_manifest.json"
    write_manifest(manifest, configs, time.perf_counter() - t0,
                   {"figure_id": figure_id, "scale": scale})
    return [csv_path, manifest]
