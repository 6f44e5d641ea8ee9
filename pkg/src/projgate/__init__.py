"""Robust location and scatter estimates by random-projection gap trimming."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Grid,
    ObservationSet,
    RngStream,
    derive_seed,
    inner_product,
    norm,
    random_unit_direction,
)
from .rt import RTConfig, TrimRecord, TrimResult, effective_threshold, max_gap, select_subsample  # noqa: E402
from .estimators import (  # noqa: E402
    EstimateBundle,
    estimate,
    trimmed_pca,
    weighted_covariance,
    weighted_mean,
)
from .baselines import ITConfig, it_trim, trick_estimate  # noqa: E402
from .simgen import ScenarioSpec, generate, run_monte_carlo  # noqa: E402

__all__ = [
    "Grid", "ObservationSet", "RngStream", "derive_seed", "inner_product", "norm",
    "random_unit_direction", "RTConfig", "TrimRecord", "TrimResult", "effective_threshold",
    "max_gap", "select_subsample", "EstimateBundle", "estimate", "trimmed_pca",
    "weighted_covariance", "weighted_mean", "ITConfig", "it_trim", "trick_estimate",
    "ScenarioSpec", "generate", "run_monte_carlo",
]
