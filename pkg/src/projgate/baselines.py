"""Comparison estimators: the oracle "trick" fit and inter-distance trimming (IT)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .estimators import estimate
from .rt import TrimRecord, make_result


@dataclass(frozen=True)
class ITConfig:
    alpha_radius: float = 0.5
    beta: float = 0.3

    def __post_init__(self):
        if not 0 < self.alpha_radius < 1:
            raise ValueError("alpha_radius must lie in (0, 1)")
        if not 0 <= self.beta <= 0.5:
            raise ValueError("beta must lie in [0, 0.5]")


def trick_estimate(data, q=None):
    """Classical estimates on the rows labelled as core (known only in simulation)."""
    if data.labels is None:
        raise ValueError("trick estimate needs ground-truth labels")
    weights = (~data.labels).astype(np.int8)
    if weights.sum() < 2:
        raise ValueError("need at least 2 core rows")
    return estimate(data, weights, q)


def it_alpha_radii(data, alpha_radius):
    """Radius of the smallest ball around each row holding ceil(alpha*n) rows.

    The centre counts towards the ball's content. Distances use the data's
    geometry (trapezoidal L2 for curves).
    """
    n = data.n
    if n < 2:
        raise ValueError("need at least 2 observations")
    if not 0 < alpha_radius < 1:
        raise ValueError("alpha_radius must lie in (0, 1)")
    k = max(1, math.ceil(alpha_radius * n - 1e-9))
    return _kernels.alpha_radii(np.ascontiguousarray(data.metric_values()), k)


def it_trim(data, cfg, radii=None):
    """Trim the floor(beta*n) rows with the largest radii.

    Equal radii are trimmed in increasing row order.

    Audit records carry the radius in the ``gap`` and ``distance_from_median``
    slots and the cut radius as ``threshold``. ``radii`` may be passed in to
    reuse one radius computation across several ``beta``.
    """
    n = data.n
    if n < 2:
        raise ValueError("need at least 2 observations")
    if radii is None:
        radii = it_alpha_radii(data, cfg.alpha_radius)
    m = int(math.floor(cfg.beta * n + 1e-9))
    order = np.lexsort((np.arange(n), -radii))[:m]
    cut = float(radii[order[-1]]) if m else math.inf
    records = [
        TrimRecord(rank + 1, int(i), float(radii[i]), cut, float(radii[i]))
        for rank, i in enumerate(order)
    ]
    return make_result(n, records, 0)
