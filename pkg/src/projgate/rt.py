"""Random-projection trimming.

Directions are drawn one at a time. For each, the active rows are projected;
if the largest spacing of the projected sample reaches the threshold, the row
whose projection lies farthest from the projected median is trimmed.
Otherwise the direction counts as unproductive. The search stops once the
trimming budget ``floor(n * alpha)`` is spent or ``maxiter`` unproductive
directions have been seen.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .core import DIRECTION_LAWS, ObservationSet, RngStream, derive_seed, direction_stream

THRESHOLD_MODES = ("paper_fixed", "scale_adaptive", "null_quantile")
COUNTER_MODES = ("cumulative", "reset_on_trim")
MAD_SCALE = 1.4826
# standard normal density at 3, the density floor used with k=3
PHI_3 = math.exp(-4.5) / math.sqrt(2 * math.pi)
MIN_ACTIVE = 3


class DegenerateDirection(ValueError):
    """The projected sample has no spread, so no scale-based threshold exists."""


@dataclass(frozen=True)
class RTConfig:
    alpha: float = 0.3
    maxiter: int = 100
    k: float = 3.0
    f0: float = 0.0044
    threshold_mode: str = "null_quantile"
    quantile: float = 0.999
    null_reps: int = 10_000
    counter_mode: str = "cumulative"
    direction_law: str = "white"
    seed: int = 0
    # seed of the null-calibration tables; None reuses ``seed``
    calibration_seed: int | None = None

    def __post_init__(self):
        if not 0 <= self.alpha <= 0.5:
            raise ValueError("alpha must lie in [0, 0.5]")
        if int(self.maxiter) != self.maxiter or self.maxiter < 1:
            raise ValueError("maxiter must be a positive integer")
        if not self.k > 0 or not self.f0 > 0:
            raise ValueError("k and f0 must be positive")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")
        if self.null_reps < 10:
            raise ValueError("null_reps must be at least 10")
        if self.counter_mode not in COUNTER_MODES:
            raise ValueError(f"counter_mode must be one of {COUNTER_MODES}")
        if self.direction_law not in DIRECTION_LAWS:
            raise ValueError(f"direction_law must be one of {DIRECTION_LAWS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def calibration_key(self):
        return self.seed if self.calibration_seed is None else self.calibration_seed

    def budget(self, n):
        # guard against alpha*n landing a hair below an integer
        return int(math.floor(n * self.alpha + 1e-9))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TrimRecord:
    direction_ordinal: int
    trimmed_index: int
    gap: float
    threshold: float
    distance_from_median: float


@dataclass(frozen=True, eq=False)
class TrimResult:
    weights: np.ndarray
    kept: tuple
    trimmed: tuple
    directions_consumed: int
    gamma: float

    @property
    def n(self):
        return self.weights.size

    @property
    def trimmed_indices(self):
        return tuple(r.trimmed_index for r in self.trimmed)

    def to_dict(self):
        return {
            "n": self.n,
            "weights": [int(w) for w in self.weights],
            "trimmed": [asdict(r) for r in self.trimmed],
            "directions_consumed": self.directions_consumed,
            "gamma": self.gamma,
        }

    def __eq__(self, other):
        if not isinstance(other, TrimResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def make_result(n, records, directions_consumed):
    weights = np.ones(n, dtype=np.int8)
    for r in records:
        weights[r.trimmed_index] = 0
    weights.flags.writeable = False
    kept = tuple(int(i) for i in np.flatnonzero(weights))
    return TrimResult(weights, kept, tuple(records), int(directions_consumed), len(records) / n)


def max_gap(sorted_projections):
    """Largest adjacent difference of a nondecreasing sequence.

    Returns ``(gap, left_index)``; ``left_index`` is 0-based and the first
    interval wins ties.

    >>> max_gap([0, 1, 2, 10])
    (8.0, 2)
    """
    s = np.asarray(sorted_projections, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need at least 2 values")
    d = np.diff(s)
    if np.any(d < 0):
        raise ValueError("projections must be sorted in nondecreasing order")
    i = int(np.argmax(d))
    return float(d[i]), i


def deheuvels_threshold(m, k, f0):
    """k * (ln m - ln ln m) / (m * f0), the largest-spacing scale at size m."""
    if m < 3:
        raise ValueError("sample size must be at least 3")
    if not k > 0 or not f0 > 0:
        raise ValueError("k and f0 must be positive")
    return k * (math.log(m) - math.log(math.log(m))) / (m * f0)


@lru_cache(maxsize=4096)
def null_gap_quantile(m, quantile, reps, seed):
    """Quantile of max_gap / sigma_hat over ``reps`` standard-normal samples of size m.

    The table for each ``m`` comes from its own calibration substream, so its
    value does not depend on which other sizes were evaluated first.
    """
    if m < 3:
        raise ValueError("sample size must be at least 3")
    rng = RngStream(derive_seed(seed, m, reps), "calibration").generator()
    stats = []
    chunk = max(1, 2_000_000 // m)
    left = reps
    while left:
        b = min(chunk, left)
        stats.append(_kernels.studentized_max_gaps(rng.standard_normal((b, m))))
        left -= b
    return float(np.quantile(np.concatenate(stats), quantile))


def _threshold(m, mad, spread, cfg, calibration_seed=None):
    if spread == 0:
        raise DegenerateDirection("all projections coincide")
    if cfg.threshold_mode == "paper_fixed":
        return deheuvels_threshold(m, cfg.k, cfg.f0)
    sigma = MAD_SCALE * mad
    if sigma == 0:
        raise DegenerateDirection("projected MAD is zero")
    if cfg.threshold_mode == "scale_adaptive":
        return deheuvels_threshold(m, cfg.k, PHI_3 / sigma)
    seed = cfg.calibration_key if calibration_seed is None else calibration_seed
    return sigma * null_gap_quantile(m, cfg.quantile, cfg.null_reps, seed)


def effective_threshold(projections, cfg, rng=None):
    """Spacing threshold in force for one projected sample.

    ``rng`` optionally overrides the calibration stream (only its seed is
    used). Raises :class:`DegenerateDirection` when the projections carry no
    scale information.
    """
    y = np.asarray(projections, dtype=np.float64)
    if y.ndim != 1 or y.size < MIN_ACTIVE:
        raise ValueError("need at least 3 projections")
    _, _, _, mad, _, _ = _kernels.scan_projection(y)
    seed = rng.seed if isinstance(rng, RngStream) else None
    return _threshold(y.size, mad, float(y.max() - y.min()), cfg, seed)


def _project(data, h):
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (data.d,):
        raise ValueError(f"direction has shape {h.shape}, expected ({data.d},)")
    if data.grid is not None:
        h = h * data.grid.weights
    return data.values @ h


def trim_step(data, active, h, c_d):
    """Row trimmed by one direction at threshold ``c_d``, or None."""
    active = np.asarray(sorted(active), dtype=np.intp)
    if active.size < MIN_ACTIVE:
        raise ValueError("need at least 3 active observations")
    y = _project(data, h)[active]
    gap, _, _, _, far, _ = _kernels.scan_projection(np.ascontiguousarray(y))
    if gap >= c_d:
        return int(active[far])
    return None


def select_subsample(data, cfg, directions=None):
    """Run the trimming search on ``data``.

    ``directions`` may supply an explicit iterable of unit directions in place
    of draws from ``RngStream(cfg.seed, "directions")``; the search also stops
    when it is exhausted.
    """
    if not isinstance(data, ObservationSet):
        data = ObservationSet(data)
    n = data.n
    if n < MIN_ACTIVE:
        raise ValueError("need at least 3 observations")
    if directions is None:
        directions = direction_stream(
            RngStream(cfg.seed, "directions"), data.d, cfg.direction_law, data.grid
        )
    directions = iter(directions)

    budget = cfg.budget(n)
    active = np.arange(n)
    records = []
    consumed = 0
    numdir = 1
    while len(records) < budget and numdir <= cfg.maxiter and active.size >= MIN_ACTIVE:
        h = next(directions, None)
        if h is None:
            break
        consumed += 1
        y = np.ascontiguousarray(_project(data, h)[active])
        gap, left, med, mad, far, far_dist = _kernels.scan_projection(y)
        spread = float(y.max() - y.min())
        try:
            c_d = _threshold(active.size, mad, spread, cfg)
        except DegenerateDirection:
            numdir += 1
            continue
        if gap >= c_d:
            idx = int(active[far])
            records.append(TrimRecord(consumed, idx, gap, c_d, far_dist))
            active = np.delete(active, far)
            if cfg.counter_mode == "reset_on_trim":
                numdir = 1
        else:
            numdir += 1
    return make_result(n, records, consumed)
