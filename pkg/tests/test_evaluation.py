import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rutnet.evaluation import (
    cluster_quality,
    ks_normality,
    ks_statistic,
    mae,
    mape,
    metric_report,
    rmse,
    uncertainty,
)
from rutnet.exceptions import ValidationError


def test_metric_hand_cases():
    assert mae([11, 18], [10, 20]) == 1.5
    assert rmse([11, 18], [10, 20]) == math.sqrt(2.5)
    assert mape([11, 18], [10, 20]) == pytest.approx(10.0, abs=1e-12)
    assert mae([4], [7]) == 3 and rmse([4], [7]) == 3
    assert mae([1, 2], [1, 2]) == rmse([1, 2], [1, 2]) == mape([1, 2], [1, 2]) == 0


def test_metric_errors():
    with pytest.raises(ValidationError, match="zero"):
        mape([1, 2], [0, 2])
    with pytest.raises(ValidationError):
        mae([1], [1, 2])
    with pytest.raises(ValidationError):
        rmse([], [])


vals = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(vals, st.randoms())
def test_rmse_ge_mae_and_permutation(errs, rnd):
    t = np.arange(1, len(errs) + 1, dtype=float)
    p = t + np.array(errs)
    assert rmse(p, t) >= mae(p, t) - 1e-9
    idx = list(range(len(t)))
    rnd.shuffle(idx)
    assert mae(p[idx], t[idx]) == pytest.approx(mae(p, t))
    assert rmse(p[idx], t[idx]) == pytest.approx(rmse(p, t))


def test_metric_report_json_and_table():
    rep = metric_report({"STR1": ([11, 18], [10, 20]), "STR2": ([5], [5])})
    assert rep.mae == pytest.approx(0.75) and rep.count == 3
    doc = json.loads(rep.to_json())
    assert doc["per_structure"]["STR1"]["mape"] == pytest.approx(10.0)
    table = rep.to_table()
    assert "STR1" in table and "Average" in table


def test_uncertainty_cases():
    assert uncertainty([[1, 2, 3], [1, 2, 3]]).mean_variance == 0
    rep = uncertainty([[0.0], [2.0]])
    assert rep.mean_variance == 1.0 and rep.trials == 2 and rep.samples == 1
    P = np.random.default_rng(0).normal(size=(5, 7))
    assert uncertainty(3 * P).mean_variance == pytest.approx(9 * uncertainty(P).mean_variance)
    with pytest.raises(ValidationError):
        uncertainty([[1, 2, 3]])


def test_cluster_quality():
    X = np.array([[0, 0], [0, 0.01], [10, 10], [10, 10.01]])
    sc, dbi, chi = cluster_quality(X, [0, 0, 1, 1])
    assert sc > 0.9 and dbi < 0.01 and chi > 1e3
    assert cluster_quality(X, [0, 1, 2, 3])[0] == 0.0
    with pytest.raises(ValidationError):
        cluster_quality(X, [0, 0, 0, 0])


def test_cluster_quality_random_labels_near_zero():
    scs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        scs.append(cluster_quality(rng.normal(size=(60, 3)), rng.integers(0, 3, 60))[0])
    assert max(abs(s) for s in scs) < 0.2


def test_ks_statistic_hand_case():
    assert ks_statistic([-1, 1], stats.norm.cdf) == pytest.approx(stats.norm.cdf(1) - 0.5, abs=1e-15)
    assert ks_statistic([-1, 1], stats.norm.cdf) == pytest.approx(0.3413, abs=1e-4)


def test_ks_matches_scipy():
    r = np.random.default_rng(3).normal(2, 3, 200)
    d, _ = ks_normality(r)
    ref = stats.kstest(r, "norm", args=(r.mean(), r.std(ddof=1)))
    assert d == pytest.approx(ref.statistic, abs=1e-12)


def test_ks_behaviour():
    small = [ks_normality(np.random.default_rng(s).normal(size=10_000))[0] for s in range(20)]
    assert sum(d < 0.02 for d in small) >= 19
    u = np.random.default_rng(0).uniform(size=1000)
    assert ks_normality(u)[1] < 0.05
    with pytest.raises(ValidationError):
        ks_normality(np.ones(20))
    with pytest.raises(ValidationError):
        ks_normality(np.arange(5.0))
