import csv
import json

import numpy as np
import pytest
from scipy.stats import kurtosis

from adaptive_inference.estimators import EstimateReport
from adaptive_inference.harness import (
    HIST_EDGES,
    AggregateStats,
    SimulationConfig,
    aggregate,
    figure_configs,
    parse_target,
    replicate_figure,
    run_chunk,
    run_replication,
    run_simulation,
)

SMALL = dict(horizon=60, replications=40, thompson_method="exact", chunk_size=15,
             estimators=("sample_mean", "aipw", "aw_two_point", "howard_cs"), targets=("2-0", "1"))


def test_targets():
    assert parse_target("2") == 2
    assert parse_target("2-0") == (2, 0)
    assert parse_target((1, 0)) == (1, 0)
    with pytest.raises(ValueError):
        parse_target("a-b")
    with pytest.raises(ValueError):
        parse_target("1-2-3")


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(replications=0)
    with pytest.raises(ValueError):
        SimulationConfig(estimators=("magic",))
    with pytest.raises(ValueError):
        SimulationConfig(targets=("3",))
    with pytest.raises(ValueError):
        SimulationConfig(design="two_stage")
    with pytest.raises(ValueError):
        SimulationConfig.from_mapping({"horizn": 5})


def test_config_from_yaml(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("setting: low_signal\nhorizon: 200\nestimators: aipw, aw_two_point\n"
                    "targets: 2-0\nreplications: 7\n")
    cfg = SimulationConfig.load(path)
    assert cfg.estimators == ("aipw", "aw_two_point") and cfg.targets == ("2-0",)
    assert cfg.truth((2, 0)) == pytest.approx(0.2)
    assert cfg.with_overrides(horizon=50, seed=None).horizon == 50
    custom = SimulationConfig(setting=None, arm_means=(0.0, 1.0), noise="normal", targets=("1",))
    assert custom.model().noise == "normal"
    (tmp_path / "bad.yaml").write_text("- a\n- b\n")
    with pytest.raises(ValueError):
        SimulationConfig.load(tmp_path / "bad.yaml")


def test_replication_is_deterministic():
    cfg = SimulationConfig(setting="low_signal", **SMALL)
    a, b = run_replication(cfg, 3), run_replication(cfg, 3)
    assert a.history == b.history
    assert [r.to_dict() for r in a.reports] == [r.to_dict() for r in b.reports]
    assert a.history != run_replication(cfg, 4).history


def test_fixed_design_leaves_other_arms_missing(tmp_path):
    cfg = SimulationConfig(design="fixed:1,0,0", horizon=20, replications=3,
                           estimators=("sample_mean", "aipw"), targets=("0", "1"))
    res = run_replication(cfg, 0, log_path=tmp_path / "log.jsonl")
    assert set(res.history.arms.tolist()) == {0}
    got = {(r.estimator_name, r.target) for r in res.reports}
    assert got == {("sample_mean", 0), ("aipw", 0)}
    assert (tmp_path / "log.jsonl").read_text().count("\n") == 21


def test_two_stage_history_shape():
    cfg = SimulationConfig(setting="intro_normal", design="two_stage", horizon=100,
                           estimators=("ipw",), targets=("0",), replications=2)
    hist = run_replication(cfg, 0).history
    assert np.sum(np.all(hist.propensities == 0.5, axis=1)) == 50


def test_chunk_aggregates_match_replication_reports():
    cfg = SimulationConfig(setting="low_signal", **SMALL)
    chunk = run_chunk(cfg, 0, 10)
    reports = [r for i in range(10) for r in run_replication(cfg, i).reports]
    ref = aggregate(reports)
    for key, st in chunk.stats.items():
        other = ref[key]
        assert st.n_defined == other.n_defined
        assert st.bias == pytest.approx(other.bias, abs=1e-12)
        assert st.rmse == pytest.approx(other.rmse, abs=1e-12)
        assert st.coverage == other.coverage
        assert st.mean_width == pytest.approx(other.mean_width, abs=1e-12)


def test_merge_is_associative_and_parallelism_invariant():
    cfg = SimulationConfig(setting="no_signal", **SMALL)
    serial = run_simulation(cfg)
    parallel = run_simulation(cfg.with_overrides(workers=2))
    one_chunk = run_simulation(cfg.with_overrides(chunk_size=1000))
    for key in serial.stats:
        a, b, c = serial.stats[key], parallel.stats[key], one_chunk.stats[key]
        assert json.dumps(a.summary()) == json.dumps(b.summary())
        for name in ("bias", "rmse", "coverage", "mean_width", "excess_kurtosis"):
            assert getattr(a, name) == pytest.approx(getattr(c, name), rel=1e-9, nan_ok=True)
        np.testing.assert_array_equal(a.hist, c.hist)
    np.testing.assert_allclose(serial.mean_pulls, one_chunk.mean_pulls)


def test_aggregate_examples():
    reports = [EstimateReport("e", 0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.95, truth=1.0) for _ in range(5)]
    st = aggregate(reports)[("e", "0")]
    assert (st.bias, st.rmse, st.coverage) == (0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_statistics_against_numpy():
    g = np.random.default_rng(0)
    point = g.standard_t(5, 5000)
    var = np.full(5000, 1.0)
    point[:7] = np.nan
    st = AggregateStats.from_arrays("e", "0", 0.2, 0.95, point, point - 1.96, point + 1.96, var)
    ok = point[np.isfinite(point)]
    err = ok - 0.2
    assert st.n_defined == 4993 and st.n_total == 5000
    assert st.bias == pytest.approx(err.mean())
    assert st.bias_se == pytest.approx(err.std(ddof=1) / np.sqrt(err.size))
    assert st.rmse == pytest.approx(np.sqrt(np.mean(err**2)))
    assert st.rmse**2 >= st.bias**2
    assert st.excess_kurtosis == pytest.approx(kurtosis(ok), rel=1e-9)
    assert st.coverage == pytest.approx(np.mean(np.abs(err) <= 1.96))
    assert st.mean_width == pytest.approx(3.92)
    assert st.hist.sum() == st.n_defined == len(st.studentized)
    assert len(st.hist) == len(HIST_EDGES) + 1 == 52
    assert st.summary()["ks_se"] > 0


def test_ks_calibration():
    z = np.random.default_rng(1).standard_normal(100_000)
    st = AggregateStats.from_arrays("e", "0", 0.0, 0.95, z, variance=np.ones_like(z))
    assert st.ks < 0.006


def test_merge_matches_union():
    g = np.random.default_rng(2)
    p, v = g.normal(size=300), g.uniform(0.5, 2, 300)
    args = lambda s: (p[s], p[s] - 1, p[s] + 1, v[s])  # noqa: E731
    whole = AggregateStats.from_arrays("e", "0", 0.1, 0.95, *args(slice(None)))
    a = AggregateStats.from_arrays("e", "0", 0.1, 0.95, *args(slice(0, 100)))
    b = AggregateStats.from_arrays("e", "0", 0.1, 0.95, *args(slice(100, 300)))
    m = a.merge(b)
    for name in ("bias", "bias_se", "rmse", "rmse_se", "coverage", "mean_width", "ks",
                 "excess_kurtosis"):
        assert getattr(m, name) == pytest.approx(getattr(whole, name), rel=1e-9)
    np.testing.assert_array_equal(m.hist, whole.hist)
    with pytest.raises(ValueError):
        a.merge(AggregateStats.from_arrays("f", "0", 0.1, 0.95, p))
    with pytest.raises(ValueError):
        AggregateStats("e", "0", 0.0, 0.95).bias


def test_contrast_diagnostics_recorded():
    cfg = SimulationConfig(setting="high_signal", **SMALL)
    st = run_simulation(cfg).cell("aw_two_point", "2-0")
    diag = st.diagnostic_means()
    assert diag["variance_ratio"] > 0
    assert diag["variance_sum_arm2"] == pytest.approx(1.0)


def test_figure_configs():
    with pytest.raises(ValueError):
        figure_configs("fig9")
    with pytest.raises(ValueError):
        figure_configs("fig1_intro", "huge")
    assert len(figure_configs("fig3_histograms")) == 3
    assert figure_configs("fig1_intro", "paper")[0].horizon == 100_000
    assert {c.horizon for c in figure_configs("fig2_contrast_evolution", horizon=1000)} == \
        {100, 250, 500, 1000}


@pytest.mark.parametrize("fig", ["fig1_intro", "fig3_histograms", "appx_lambda_path",
                                 "fig2_contrast_evolution", "fig4_arm_values"])
def test_replicate_figure_outputs(tmp_path, fig):
    csv_path, manifest = replicate_figure(fig, "desk", tmp_path, replications=6, horizon=40)
    rows = list(csv.DictReader(open(csv_path)))
    meta = json.loads(manifest.read_text())
    assert meta["figure_id"] == fig and "wall_time_seconds" in meta and "git_hash" in meta
    if fig == "fig1_intro":
        assert {r["estimator"] for r in rows} == {"sample_mean", "ipw", "aw_constant"}
        assert len(rows) == 18 and "scaled_estimate" in rows[0]
    elif fig == "fig3_histograms":
        assert len({(r["setting"], r["estimator"]) for r in rows}) == 12
        per_cell = {}
        for r in rows:
            per_cell[(r["setting"], r["estimator"])] = per_cell.get((r["setting"], r["estimator"]), 0) + int(r["count"])
        assert all(v <= 6 for v in per_cell.values())
    elif fig == "appx_lambda_path":
        assert {r["arm"] for r in rows} == {"good", "bad"} and len(rows) == 80
        assert float(rows[39]["scaled_allocation"]) == 0.0
    else:
        assert {"bias", "rmse", "coverage", "setting", "horizon"} <= rows[0].keys()
