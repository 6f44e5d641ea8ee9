import json
import math
import random

import numpy as np
import pytest

from projgate.core import Grid, RngStream
from projgate.rt import RTConfig, make_result, TrimRecord
from projgate.simgen import (
    ReplicateRow,
    ScenarioSpec,
    aggregate,
    central_mean,
    detection_metrics,
    gen_functional,
    gen_multivariate,
    ou_covariance,
    outlier_mean,
    replicate_seeds,
    run_monte_carlo,
    run_replicate,
)

FAST_RT = RTConfig(null_reps=400)


def mv(**kw):
    return ScenarioSpec("multivariate", **kw)


class TestSpec:
    @pytest.mark.parametrize(
        "kw", [{"eps": 0.5}, {"eps": -0.1}, {"n": 0}, {"family": "tabular"}, {"case": "D"}, {"grid_size": 1}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ScenarioSpec(**kw)

    def test_outlier_count_is_exact(self):
        assert ScenarioSpec(n=100, eps=0.1).n_outliers == 10
        assert ScenarioSpec(n=30, eps=0.1).n_outliers == 3
        assert ScenarioSpec(n=7, eps=0.2).n_outliers == 1

    def test_labels_distinct(self):
        assert ScenarioSpec(case="A").label != ScenarioSpec(case="B").label
        assert mv(x0=3).label != mv(x0=7).label


class TestMultivariate:
    def test_clean(self):
        d = gen_multivariate(mv(eps=0.0), RngStream(0, "data"))
        assert not d.labels.any()

    def test_point_outliers(self):
        d = gen_multivariate(mv(n=100, eps=0.1, x0=7, p=10), RngStream(1, "data"))
        out = d.values[d.labels]
        assert out.shape == (10, 10)
        assert np.array_equal(out, np.tile(np.r_[7.0, np.zeros(9)], (10, 1)))

    def test_shuffled(self):
        d = gen_multivariate(mv(n=100, eps=0.1), RngStream(1, "data"))
        assert not np.array_equal(np.flatnonzero(d.labels), np.arange(90, 100))

    def test_core_covariance(self):
        d = gen_multivariate(mv(n=2000, p=5, eps=0.0), RngStream(2, "data"))
        assert np.max(np.abs(np.cov(d.values.T) - np.eye(5))) < 0.15

    def test_deterministic(self):
        a = gen_multivariate(mv(), RngStream(3, "data"))
        b = gen_multivariate(mv(), RngStream(3, "data"))
        assert np.array_equal(a.values, b.values)

    def test_wrong_family(self):
        with pytest.raises(ValueError):
            gen_multivariate(ScenarioSpec(), RngStream(0))


class TestOU:
    def test_examples(self):
        k = ou_covariance(Grid.uniform())
        assert np.all(np.diag(k) == 0.3)
        assert math.isclose(k[0, -1], 0.3 * math.exp(-10 / 3), rel_tol=1e-12)
        assert abs(k[0, -1] - 0.010697) < 1e-5  # quoted value is rounded loosely
        assert np.array_equal(k, k.T)
        assert np.linalg.eigvalsh(k).min() > 0

    def test_empirical_moments(self):
        spec = ScenarioSpec(n=10_000, eps=0.0)
        d = gen_functional(spec, RngStream(4, "data"))
        resid = d.values - central_mean(spec.grid.points)
        var = resid.var(axis=0)
        assert np.all(np.abs(var - 0.3) < 0.03)
        lag = np.mean([np.mean(resid[:, i] * resid[:, i + 30]) for i in range(0, 71)])
        assert abs(lag - 0.3 * math.exp(-1)) < 0.15 * 0.3 * math.exp(-1)


class TestFunctional:
    def test_central_mean(self):
        assert abs(central_mean(0.5) - 5.3033) < 1e-4

    def test_case_shapes(self):
        t = Grid.uniform().points
        assert np.allclose(outlier_mean(t, "B") - central_mean(t), 2.0)
        c = outlier_mean(t, "C") - central_mean(t)
        inside = (t >= 0.4) & (t <= 0.6)
        assert np.all(c[~inside] == 0) and np.allclose(c[inside], 2)
        assert np.allclose(outlier_mean(t, "A"), 30 * (1 - t) * t**1.5)
        with pytest.raises(ValueError):
            outlier_mean(t, "Z")

    @pytest.mark.parametrize("case", ["A", "B", "C"])
    def test_split(self, case):
        d = gen_functional(ScenarioSpec(case=case), RngStream(5, "data"))
        assert d.labels.sum() == 10 and d.n == 100 and d.functional
        assert len(d.grid) == 101

    def test_outliers_are_shifted(self):
        d = gen_functional(ScenarioSpec(n=400, eps=0.25), RngStream(6, "data"))
        gap = d.values[d.labels].mean() - d.values[~d.labels].mean()
        assert abs(gap - 2) < 0.2


class TestDetection:
    def test_counts(self):
        lab = np.zeros(100, bool)
        lab[:10] = True
        exact = make_result(100, [TrimRecord(i + 1, i, 1, 1, 1) for i in range(10)], 10)
        m = detection_metrics(exact, lab)
        assert (m.outliers_pruned, m.core_pruned, m.gamma) == (10, 0, 0.1)
        m = detection_metrics(make_result(100, [], 3), lab)
        assert (m.outliers_pruned, m.core_pruned, m.gamma) == (0, 0, 0)
        mixed = make_result(100, [TrimRecord(1, i, 1, 1, 1) for i in [0, 1, 2, 3, 4, 50, 60]], 7)
        m = detection_metrics(mixed, lab)
        assert (m.outliers_pruned, m.core_pruned, m.gamma) == (5, 2, 0.07)

    def test_needs_labels(self):
        with pytest.raises(ValueError):
            detection_metrics(make_result(5, [], 0), None)


class TestMonteCarlo:
    def test_single_replicate_equals_row(self):
        spec = ScenarioSpec(n=40)
        rep = run_monte_carlo(spec, R=1, master_seed=3, bounds=(0.2,), rt_config=FAST_RT)
        rows = run_replicate(spec, 0, 3, (0.2,), rep.rt_config)
        for row in rows:
            agg = rep.row(row.estimator, row.bound)
            assert agg.location_error == row.location_error
            assert agg.correlation_error == row.correlation_error
            assert agg.replicates == 1 and agg.failures == 0

    def test_byte_identical_and_thread_independent(self):
        spec = ScenarioSpec(n=40)
        a = run_monte_carlo(spec, R=6, master_seed=9, rt_config=FAST_RT, threads=1)
        b = run_monte_carlo(spec, R=6, master_seed=9, rt_config=FAST_RT, threads=3)
        ja, jb = (json.dumps(r.to_dict(), sort_keys=True) for r in (a, b))
        assert ja == jb
        c = run_monte_carlo(spec, R=6, master_seed=10, rt_config=FAST_RT)
        assert json.dumps(c.to_dict(), sort_keys=True) != ja

    def test_aggregation_order_free(self):
        spec = mv(n=30)
        rep = run_monte_carlo(spec, R=8, master_seed=1, bounds=(0.1, 0.3), rt_config=FAST_RT)
        rows = list(rep.per_replicate)
        random.Random(0).shuffle(rows)
        assert aggregate(spec, rows, ("trick", "rt", "it"), (0.1, 0.3)) == rep.rows

    def test_aggregates_are_exact_means(self):
        spec = mv(n=30)
        rep = run_monte_carlo(spec, R=5, master_seed=2, bounds=(0.3,), rt_config=FAST_RT)
        vals = [r.location_error for r in rep.per_replicate if r.estimator == "it"]
        assert len(vals) == 5
        assert rep.row("it", 0.3).location_error == math.fsum(vals) / 5

    def test_replicate_seeds(self):
        s = replicate_seeds(0, 4)
        assert s != replicate_seeds(0, 5) and s == replicate_seeds(0, 4)
        assert set(s) == {"data", "directions"}

    def test_failures_recorded(self):
        # n=2 makes the trimmer refuse; failures stay in the report
        rep = run_monte_carlo(mv(n=2, eps=0.0), R=3, master_seed=0, bounds=(0.1,), rt_config=FAST_RT)
        row = rep.row("rt", 0.1)
        assert row.replicates == 3 and row.failures == 3 and row.location_error is None
        assert all(r.error for r in rep.per_replicate if r.estimator == "rt")

    def test_roster(self):
        rep = run_monte_carlo(mv(n=20), roster=("it",), R=2, rt_config=FAST_RT)
        assert {r.estimator for r in rep.rows} == {"it"}
        with pytest.raises(ValueError):
            run_monte_carlo(mv(n=20), roster=("mve",), R=1)
        with pytest.raises(ValueError):
            run_monte_carlo(mv(n=20), R=0)

    def test_calibration_shared_unless_fixed(self):
        rep = run_monte_carlo(mv(n=20), R=1, master_seed=4, rt_config=FAST_RT)
        fixed = run_monte_carlo(mv(n=20), R=1, master_seed=4, rt_config=RTConfig(null_reps=400, calibration_seed=77))
        assert rep.rt_config.calibration_seed != 77
        assert fixed.rt_config.calibration_seed == 77

    def test_metrics_multivariate(self):
        rep = run_monte_carlo(mv(n=50), roster=("trick",), R=1, master_seed=5)
        row = next(r for r in rep.per_replicate)
        assert math.isclose(row.location_error_per_coord, row.location_error / 10)

    def test_report_row_fields(self):
        assert ReplicateRow(0, "rt", 0.1).error is None
