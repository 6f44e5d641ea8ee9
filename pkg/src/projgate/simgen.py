"""Contamination scenarios and the Monte Carlo runner.

Two families are generated:

* ``multivariate``: ``n - floor(eps*n)`` standard normal rows in R^p plus
  ``floor(eps*n)`` copies of the point ``(x0, 0, ..., 0)``.
* ``functional``: curves on 101 points of [0, 1] with mean
  ``30 t (1-t)^1.5`` and Ornstein-Uhlenbeck noise; outlier curves follow
  Case A (mirrored shape), B (shift by 2) or C (shift by 2 on [0.4, 0.6]).

Each replicate draws its data and directions from streams keyed by
``(master_seed, replicate, label)``, so results do not depend on the order in
which replicates run.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np

from .baselines import ITConfig, it_alpha_radii, it_trim
from .core import Grid, ObservationSet, RngStream, cholesky, derive_seed
from .estimators import estimate, l2_error_cov, l2_error_mean
from .rt import RTConfig, select_subsample

FAMILIES = ("multivariate", "functional")
CASES = ("A", "B", "C")
ESTIMATORS = ("trick", "rt", "it")
OU_VARIANCE = 0.3
OU_SCALE = 0.3


@dataclass(frozen=True)
class ScenarioSpec:
    family: str = "functional"
    n: int = 100
    p: int = 10
    grid_size: int = 101
    eps: float = 0.1
    x0: float = 7.0
    case: str = "B"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.eps < 0.5:
            raise ValueError("eps must lie in [0, 0.5)")
        if self.family == "multivariate" and self.p < 1:
            raise ValueError("p must be positive")
        if self.family == "functional":
            if self.case not in CASES:
                raise ValueError(f"case must be one of {CASES}")
            if self.grid_size < 2:
                raise ValueError("grid_size must be at least 2")

    @property
    def n_outliers(self):
        return int(math.floor(self.eps * self.n + 1e-9))

    @property
    def grid(self):
        return Grid.uniform(0.0, 1.0, self.grid_size) if self.family == "functional" else None

    @property
    def label(self):
        if self.family == "functional":
            return f"functional-{self.case}-n{self.n}-eps{self.eps:g}"
        return f"multivariate-n{self.n}-p{self.p}-eps{self.eps:g}-x0{self.x0:g}"

    def to_dict(self):
        return asdict(self)


def _shuffle(rng, values, labels):
    perm = rng.permutation(values.shape[0])
    return values[perm], labels[perm]


def gen_multivariate(spec, rng):
    if spec.family != "multivariate":
        raise ValueError("spec is not multivariate")
    rng = rng.generator() if isinstance(rng, RngStream) else rng
    n_out = spec.n_outliers
    core = rng.standard_normal((spec.n - n_out, spec.p))
    point = np.zeros(spec.p)
    point[0] = spec.x0
    values = np.vstack([core, np.tile(point, (n_out, 1))])
    labels = np.r_[np.zeros(spec.n - n_out, bool), np.ones(n_out, bool)]
    values, labels = _shuffle(rng, values, labels)
    return ObservationSet(values, labels=labels)


def ou_covariance(grid):
    t = grid.points
    return OU_VARIANCE * np.exp(-np.abs(t[:, None] - t[None, :]) / OU_SCALE)


@lru_cache(maxsize=8)
def _ou_factor(size):
    f = cholesky(ou_covariance(Grid.uniform(0.0, 1.0, size)))
    f.flags.writeable = False
    return f


def central_mean(t):
    return 30 * t * (1 - t) ** 1.5


def outlier_mean(t, case):
    if case == "A":
        return 30 * (1 - t) * t**1.5
    if case == "B":
        return central_mean(t) + 2
    if case == "C":
        return central_mean(t) + np.where((t >= 0.4) & (t <= 0.6), 2.0, 0.0)
    raise ValueError(f"unknown case {case!r}")


def gen_functional(spec, rng):
    if spec.family != "functional":
        raise ValueError("spec is not functional")
    rng = rng.generator() if isinstance(rng, RngStream) else rng
    grid = spec.grid
    t = grid.points
    n_out = spec.n_outliers
    noise = rng.standard_normal((spec.n, spec.grid_size)) @ _ou_factor(spec.grid_size).T
    means = np.vstack(
        [np.tile(central_mean(t), (spec.n - n_out, 1)), np.tile(outlier_mean(t, spec.case), (n_out, 1))]
    )
    labels = np.r_[np.zeros(spec.n - n_out, bool), np.ones(n_out, bool)]
    values, labels = _shuffle(rng, means + noise, labels)
    return ObservationSet(values, grid=grid, labels=labels)


def generate(spec, rng):
    if spec.family == "functional":
        return gen_functional(spec, rng)
    return gen_multivariate(spec, rng)


@dataclass(frozen=True)
class DetectionMetrics:
    outliers_pruned: int
    core_pruned: int
    gamma: float


def detection_metrics(result, labels):
    if labels is None:
        raise ValueError("detection metrics need ground-truth labels")
    labels = np.asarray(labels, dtype=bool)
    idx = np.fromiter(result.trimmed_indices, dtype=np.intp)
    out = int(labels[idx].sum()) if idx.size else 0
    return DetectionMetrics(out, int(idx.size - out), result.gamma)


# --- error metrics --------------------------------------------------------


def scenario_truth(spec):
    """True mean and correlation of the core distribution."""
    if spec.family == "functional":
        t = spec.grid.points
        return central_mean(t), ou_covariance(spec.grid) / OU_VARIANCE
    return np.zeros(spec.p), np.eye(spec.p)


def estimate_errors(spec, bundle, truth):
    """(location error, correlation error, per-coordinate location MSE or None).

    Functional: L2E of mean and of the correlation surface. Multivariate:
    squared Euclidean error of the mean and ||R - I||_F / p.
    """
    mu, corr = truth
    if spec.family == "functional":
        return (
            l2_error_mean(bundle.mean, mu),
            l2_error_cov(bundle.correlation, corr),
            None,
        )
    sq = float(np.sum((bundle.mean - mu) ** 2))
    return sq, float(np.linalg.norm(bundle.correlation - corr) / spec.p), sq / spec.p


# --- Monte Carlo ----------------------------------------------------------


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    estimator: str
    bound: float | None
    location_error: float | None = None
    correlation_error: float | None = None
    location_error_per_coord: float | None = None
    outliers_pruned: int | None = None
    core_pruned: int | None = None
    gamma: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    estimator: str
    bound: float | None
    replicates: int
    failures: int
    location_error: float | None
    correlation_error: float | None
    location_error_per_coord: float | None
    outliers_pruned: float | None
    core_pruned: float | None
    gamma: float | None


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    spec: ScenarioSpec
    rt_config: RTConfig
    it_alpha: float
    bounds: tuple
    replicates: int
    master_seed: int
    rows: tuple
    per_replicate: tuple
    wall_time: float = 0.0

    def row(self, estimator, bound=None):
        for r in self.rows:
            if r.estimator == estimator and (bound is None or r.bound == bound):
                return r
        raise KeyError((estimator, bound))

    def to_dict(self):
        """Nested report. Wall time is left out so the payload is reproducible."""
        return {
            "schema_version": 1,
            "scenario": self.spec.to_dict(),
            "scenario_label": self.spec.label,
            "rt_config": self.rt_config.to_dict(),
            "it_alpha": self.it_alpha,
            "bounds": list(self.bounds),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "aggregates": [asdict(r) for r in self.rows],
            "per_replicate": [asdict(r) for r in self.per_replicate],
        }


def replicate_seeds(master_seed, r):
    return {
        label: derive_seed(master_seed, r, label) for label in ("data", "directions")
    }


def run_replicate(spec, r, master_seed, bounds, rt_config, it_alpha=0.5, roster=ESTIMATORS):
    """All estimator rows for replicate ``r``."""
    seeds = replicate_seeds(master_seed, r)
    rows = []

    def fail(est, bound, exc):
        rows.append(ReplicateRow(r, est, bound, error=f"{type(exc).__name__}: {exc}"))

    try:
        data = generate(spec, RngStream(seeds["data"], "data"))
    except Exception as exc:  # recorded, never dropped
        for est in roster:
            for b in ([None] if est == "trick" else bounds):
                fail(est, b, exc)
        return rows
    truth = scenario_truth(spec)

    if "trick" in roster:
        try:
            loc, cor, pc = estimate_errors(spec, estimate(data, (~data.labels).astype(np.int8)), truth)
            rows.append(ReplicateRow(r, "trick", None, loc, cor, pc))
        except Exception as exc:
            fail("trick", None, exc)

    radii = None
    for b in bounds:
        if "rt" in roster:
            try:
                cfg = replace(rt_config, alpha=b, seed=seeds["directions"])
                res = select_subsample(data, cfg)
                rows.append(_row(spec, r, "rt", b, data, res, truth))
            except Exception as exc:
                fail("rt", b, exc)
        if "it" in roster:
            try:
                if radii is None:
                    radii = it_alpha_radii(data, it_alpha)
                res = it_trim(data, ITConfig(it_alpha, b), radii)
                rows.append(_row(spec, r, "it", b, data, res, truth))
            except Exception as exc:
                fail("it", b, exc)
    return rows


def _row(spec, r, est, bound, data, res, truth):
    loc, cor, pc = estimate_errors(spec, estimate(data, res.weights), truth)
    det = detection_metrics(res, data.labels)
    return ReplicateRow(r, est, bound, loc, cor, pc, det.outliers_pruned, det.core_pruned, det.gamma)


def _mean(values):
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def aggregate(spec, per_replicate, roster, bounds):
    rows = []
    for est in roster:
        for b in ([None] if est == "trick" else bounds):
            sel = sorted(
                (x for x in per_replicate if x.estimator == est and x.bound == b),
                key=lambda x: x.replicate,
            )
            ok = [x for x in sel if x.error is None]
            rows.append(
                AggregateRow(
                    spec.label,
                    est,
                    b,
                    len(sel),
                    len(sel) - len(ok),
                    _mean(x.location_error for x in ok),
                    _mean(x.correlation_error for x in ok),
                    _mean(x.location_error_per_coord for x in ok),
                    _mean(x.outliers_pruned for x in ok),
                    _mean(x.core_pruned for x in ok),
                    _mean(x.gamma for x in ok),
                )
            )
    return tuple(rows)


def run_monte_carlo(
    spec,
    roster=ESTIMATORS,
    R=100,
    master_seed=0,
    bounds=(0.2, 0.3, 0.4),
    rt_config=None,
    it_alpha=0.5,
    threads=1,
):
    """Run ``R`` replicates of ``spec`` and average the per-estimator metrics.

    Unless ``rt_config`` fixes a calibration seed, the RT null-calibration
    tables are keyed by ``master_seed``; either way all replicates share them. Output is identical for any ``threads``.
    """
    if R < 1:
        raise ValueError("need at least one replicate")
    bad = set(roster) - set(ESTIMATORS)
    if bad or not roster:
        raise ValueError(f"unknown or empty estimator roster {sorted(bad)}")
    roster = tuple(e for e in ESTIMATORS if e in roster)
    bounds = tuple(float(b) for b in bounds)
    rt_config = rt_config or RTConfig()
    if rt_config.calibration_seed is None:
        rt_config = replace(rt_config, calibration_seed=derive_seed(master_seed, "calibration"))

    start = time.perf_counter()

    def job(r):
        return run_replicate(spec, r, master_seed, bounds, rt_config, it_alpha, roster)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(job, range(R)))
    else:
        chunks = [job(r) for r in range(R)]
    per_rep = tuple(row for chunk in chunks for row in chunk)
    return MonteCarloReport(
        spec,
        rt_config,
        it_alpha,
        bounds,
        R,
        master_seed,
        aggregate(spec, per_rep, roster, bounds),
        per_rep,
        time.perf_counter() - start,
    )
