import math

import numpy as np
import pytest

from projgate.baselines import ITConfig, it_alpha_radii, it_trim, trick_estimate
from projgate.core import Grid, ObservationSet
from projgate.estimators import estimate


def radii_oracle(x, alpha):
    n = len(x)
    k = math.ceil(alpha * n)
    out = []
    for i in range(n):
        dist = sorted(math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(x[i], x[j]))) for j in range(n))
        out.append(dist[k - 1])
    return out


def ring_instance(seed=0):
    """80 core points near the origin and a ring of 20 points at radius 10."""
    r = np.random.default_rng(seed)
    core = r.normal(0, 1, size=(80, 2))
    ang = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    ring = 10 * np.column_stack([np.cos(ang), np.sin(ang)])
    x = np.vstack([core, ring])
    perm = r.permutation(100)
    labels = np.arange(100) >= 80
    return x[perm], labels[perm]


class TestConfig:
    @pytest.mark.parametrize("kw", [{"alpha_radius": 0}, {"alpha_radius": 1}, {"beta": -0.1}, {"beta": 0.6}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ITConfig(**kw)


class TestTrick:
    def test_no_outliers(self, rng):
        x = rng.normal(size=(15, 3))
        data = ObservationSet(x, labels=np.zeros(15, bool))
        a, b = trick_estimate(data), estimate(x)
        assert np.array_equal(a.mean, b.mean) and np.array_equal(a.covariance, b.covariance)

    def test_flagged_rows_dropped(self, rng):
        x = rng.normal(size=(12, 3))
        lab = np.zeros(12, bool)
        lab[[3, 7]] = True
        a = trick_estimate(ObservationSet(x, labels=lab))
        b = estimate(np.delete(x, [3, 7], axis=0))
        assert np.allclose(a.mean, b.mean, rtol=1e-12) and np.allclose(a.covariance, b.covariance, rtol=1e-12)

    def test_outlier_values_irrelevant(self, rng):
        x = rng.normal(size=(12, 3))
        lab = np.zeros(12, bool)
        lab[[0, 5]] = True
        y = x.copy()
        y[lab] = 1e6
        a = trick_estimate(ObservationSet(x, labels=lab))
        b = trick_estimate(ObservationSet(y, labels=lab))
        assert np.array_equal(a.mean, b.mean)

    def test_needs_labels(self, rng):
        with pytest.raises(ValueError):
            trick_estimate(ObservationSet(rng.normal(size=(5, 2))))


class TestRadii:
    def test_collinear(self):
        # ceil(0.5 * 3) = 2: nearest neighbour distance, self included
        r = it_alpha_radii(ObservationSet([[0.0], [1.0], [3.0]]), 0.5)
        assert np.array_equal(r, [1.0, 1.0, 2.0])

    def test_identical_points(self):
        assert np.array_equal(it_alpha_radii(ObservationSet(np.ones((6, 3))), 0.5), np.zeros(6))

    def test_self_only(self, rng):
        assert np.array_equal(it_alpha_radii(ObservationSet(rng.normal(size=(10, 2))), 0.05), np.zeros(10))

    def test_oracle_100_instances(self):
        r = np.random.default_rng(3)
        for _ in range(100):
            n = int(r.integers(2, 51))
            x = r.normal(size=(n, int(r.integers(1, 6)))) * 4
            alpha = float(r.uniform(0.01, 0.99))
            got = it_alpha_radii(ObservationSet(x), alpha)
            want = radii_oracle(x.tolist(), alpha)
            assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, max(want))

    def test_functional_geometry(self, rng):
        g = Grid(np.cumsum(rng.uniform(0.1, 1, 8)))
        x = rng.normal(size=(9, 8))
        got = it_alpha_radii(ObservationSet(x, grid=g), 0.5)
        want = radii_oracle((x * np.sqrt(g.weights)).tolist(), 0.5)
        assert np.allclose(got, want, rtol=1e-12)

    def test_invariances(self, rng):
        x = rng.normal(size=(20, 3))
        t, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        perm = rng.permutation(20)
        base = it_alpha_radii(ObservationSet(x), 0.5)
        assert np.allclose(it_alpha_radii(ObservationSet(x @ t.T + 5), 0.5), base, atol=1e-12)
        assert np.array_equal(it_alpha_radii(ObservationSet(x[perm]), 0.5), base[perm])

    def test_needs_two(self):
        with pytest.raises(ValueError):
            it_alpha_radii(ObservationSet([[1.0]]), 0.5)


class TestTrim:
    def test_beta_zero(self, rng):
        res = it_trim(ObservationSet(rng.normal(size=(10, 2))), ITConfig(beta=0))
        assert res.trimmed == () and res.gamma == 0

    @pytest.mark.parametrize("beta", [0.1, 0.25, 0.3, 0.5])
    def test_exact_count(self, rng, beta):
        res = it_trim(ObservationSet(rng.normal(size=(37, 2))), ITConfig(beta=beta))
        assert len(res.trimmed) == math.floor(beta * 37)

    def test_ring_removed(self):
        x, lab = ring_instance()
        res = it_trim(ObservationSet(x), ITConfig(0.5, 0.2))
        assert set(res.trimmed_indices) == set(np.flatnonzero(lab))

    def test_ring_plus_core(self):
        x, lab = ring_instance()
        data = ObservationSet(x)
        radii = it_alpha_radii(data, 0.5)
        res = it_trim(data, ITConfig(0.5, 0.4), radii)
        t = set(res.trimmed_indices)
        assert set(np.flatnonzero(lab)) <= t and len(t) == 40
        core = np.flatnonzero(~lab)
        worst_core = core[np.argsort(-radii[core], kind="stable")[:20]]
        assert t - set(np.flatnonzero(lab)) == set(worst_core)

    def test_ties_trim_smaller_index_first(self):
        data = ObservationSet([[0.0], [0.0], [0.0], [0.0]])
        res = it_trim(data, ITConfig(0.5, 0.5))
        assert res.trimmed_indices == (0, 1)

    def test_audit_fields(self, rng):
        data = ObservationSet(rng.normal(size=(20, 2)))
        radii = it_alpha_radii(data, 0.5)
        res = it_trim(data, ITConfig(0.5, 0.2), radii)
        cut = min(radii[i] for i in res.trimmed_indices)
        for rec in res.trimmed:
            assert rec.gap == rec.distance_from_median == radii[rec.trimmed_index]
            assert rec.threshold == cut
        assert res.directions_consumed == 0
