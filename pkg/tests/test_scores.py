import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptive_inference.history import BanditHistory, StepRecord
from adaptive_inference.scores import (
    aipw_score,
    arm_scores,
    contrast_score,
    ipw_score,
    plug_in_matrix,
    score_series,
)


def rec(e, w, y, t=1):
    return StepRecord(t, tuple(e), w, y)


def test_ipw_examples():
    assert ipw_score(rec((0.5, 0.5), 1, 3.0), 0) == 0.0
    assert ipw_score(rec((0.5, 0.5), 0, 1.0), 0) == 2.0
    assert ipw_score(rec((1.0, 0.0), 0, 1.7), 0) == 1.7


def test_aipw_examples():
    assert aipw_score(rec((1.0, 0.0), 0, 2.3), 0, plug_in=9.0) == 2.3
    assert aipw_score(rec((0.5, 0.5), 1, 2.3), 0, plug_in=9.0) == 9.0
    assert aipw_score(rec((0.25, 0.75), 0, 2.0), 0, plug_in=1.0) == 5.0


def test_zero_propensity_is_an_error():
    with pytest.raises(ValueError):
        ipw_score(rec((1.0, 0.0), 0, 1.0), 1)
    with pytest.raises(ValueError):
        aipw_score(rec((1.0, 0.0), 0, 1.0), 1, 0.0)
    hist = BanditHistory([[1.0, 0.0]], [0], [1.0])
    with pytest.raises(ValueError):
        arm_scores(hist, 1)


def test_contrast_examples():
    r = rec((0.2, 0.3, 0.5), 1, 4.0)
    m = (1.0, 2.0, 3.0)
    assert contrast_score(r, 1, 1, m) == 0.0
    # e(w1) = 1 would leave w2 with zero propensity, where scores are undefined;
    # check the composition as e(w1) -> 1 instead
    near = rec((1 - 1e-12, 1e-12), 0, 4.0)
    assert contrast_score(near, 0, 1, (0.0, 1.5)) == pytest.approx(4.0 - 1.5, abs=1e-9)
    with pytest.raises(ValueError):
        contrast_score(rec((1.0, 0.0), 0, 4.0), 0, 1, (0.0, 1.5))
    assert contrast_score(r, 1, 2, m) == aipw_score(r, 1, m[1]) - aipw_score(r, 2, m[2])


@given(st.floats(0.01, 1.0), st.floats(-10, 10), st.floats(-10, 10))
def test_ipw_is_aipw_with_zero_plug_in(e, y, m):
    r = rec((e, 1 - e), 0, y)
    assert ipw_score(r, 0) == aipw_score(r, 0, 0.0)


def test_unbiased_given_history():
    # E[score | past] = Q(w) for any plug-in: average over the arm draw exactly
    e = np.array([0.2, 0.5, 0.3])
    q = np.array([1.0, -2.0, 0.5])
    for plug in (0.0, 3.0, -7.0):
        for w in range(3):
            expected = sum(e[a] * aipw_score(rec(e, a, q[a]), w, plug) for a in range(3))
            assert expected == pytest.approx(q[w], abs=1e-12)


def test_vector_scores_match_scalar_scores():
    g = np.random.default_rng(0)
    T = 40
    props = g.dirichlet(np.ones(3), T)
    arms = [int(g.choice(3, p=p)) for p in props]
    hist = BanditHistory(props, arms, g.normal(size=T))
    m = plug_in_matrix(hist, "running")
    for w in range(3):
        v = arm_scores(hist, w)
        for i, r in enumerate(hist.steps):
            assert v[i] == pytest.approx(aipw_score(r, w, m[i, w]), abs=1e-12)
    s = score_series(hist, (2, 0))
    np.testing.assert_allclose(s.values, arm_scores(hist, 2) - arm_scores(hist, 0))
    assert score_series(hist, 1, "ipw").kind == "ipw"


def test_plug_in_options():
    hist = BanditHistory([[0.5, 0.5]] * 3, [0, 0, 1], [2.0, 4.0, 1.0])
    np.testing.assert_array_equal(plug_in_matrix(hist, "running"),
                                  [[0, 0], [2, 0], [3, 0]])
    np.testing.assert_array_equal(plug_in_matrix(hist, "zero"), np.zeros((3, 2)))
    np.testing.assert_array_equal(plug_in_matrix(hist, [1.0, 2.0]), [[1, 2]] * 3)
    with pytest.raises(ValueError):
        plug_in_matrix(hist, "oracle")
    with pytest.raises(ValueError):
        score_series(hist, 0, "dr")
