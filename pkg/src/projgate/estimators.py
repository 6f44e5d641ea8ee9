"""Classical estimators on the rows left after trimming, plus L2 error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ObservationSet, symmetric_eigendecomposition


def _values(data):
    return data.values if isinstance(data, ObservationSet) else np.atleast_2d(np.asarray(data, float))


def _kept_rows(data, weights):
    x = _values(data)
    w = np.asarray(weights)
    if w.shape != (x.shape[0],):
        raise ValueError(f"expected {x.shape[0]} weights, got shape {w.shape}")
    if not np.all((w == 0) | (w == 1)):
        raise ValueError("weights must be binary")
    return x[w == 1]


def weighted_mean(data, weights):
    kept = _kept_rows(data, weights)
    if kept.shape[0] == 0:
        raise ValueError("empty subsample: all weights are zero")
    return kept.mean(axis=0)


def weighted_covariance(data, weights):
    """Covariance of the kept rows with divisor sum(w) (no n-1 correction)."""
    kept = _kept_rows(data, weights)
    if kept.shape[0] < 2:
        raise ValueError("need at least 2 kept rows for a covariance")
    dev = kept - kept.mean(axis=0)
    s = dev.T @ dev / kept.shape[0]
    return (s + s.T) / 2


def correlation_from_covariance(s):
    s = np.asarray(s, dtype=np.float64)
    diag = np.diag(s)
    if np.any(diag <= 0):
        raise ValueError("covariance diagonal must be strictly positive")
    sd = np.sqrt(diag)
    r = s / np.outer(sd, sd)
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


def trimmed_pca(data, weights, q):
    """Top-``q`` eigenpairs of the trimmed covariance.

    Components are returned as rows (``q x d``); in functional mode each row
    is a weight function sampled on the data's grid.
    """
    s = weighted_covariance(data, weights)
    if not 1 <= q <= s.shape[0]:
        raise ValueError(f"q must lie in [1, {s.shape[0]}]")
    vals, vecs = symmetric_eigendecomposition(s)
    return vals[:q], vecs[:, :q].T.copy()


def l2_error_mean(est, truth, N=None):
    """sqrt(mean((est - truth)^2)) over the N grid points (uniform weights)."""
    est = np.ravel(np.asarray(est, dtype=np.float64))
    truth = np.ravel(np.asarray(truth, dtype=np.float64))
    if est.shape != truth.shape or est.size == 0:
        raise ValueError("curves must have the same non-zero length")
    if N is not None and N != est.size:
        raise ValueError(f"N={N} does not match curve length {est.size}")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def l2_error_cov(est, truth, N=None):
    """Frobenius norm of (est - truth) divided by N."""
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise ValueError("surfaces must be square matrices of equal shape")
    if N is not None and N != est.shape[0]:
        raise ValueError(f"N={N} does not match matrix size {est.shape[0]}")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


@dataclass(frozen=True, eq=False)
class EstimateBundle:
    mean: np.ndarray
    covariance: np.ndarray
    correlation: np.ndarray
    eigenvalues: np.ndarray | None = None
    components: np.ndarray | None = None

    @property
    def q(self):
        return 0 if self.eigenvalues is None else self.eigenvalues.size

    def to_dict(self):
        out = {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "correlation": self.correlation.tolist(),
        }
        if self.eigenvalues is not None:
            out["pca"] = {
                "eigenvalues": self.eigenvalues.tolist(),
                "components": self.components.tolist(),
            }
        return out


def estimate(data, weights=None, q=None):
    """Mean, covariance, correlation and (optionally) q principal components."""
    x = _values(data)
    if weights is None:
        weights = np.ones(x.shape[0], dtype=np.int8)
    mean = weighted_mean(data, weights)
    cov = weighted_covariance(data, weights)
    corr = correlation_from_covariance(cov)
    vals = comps = None
    if q:
        vals, comps = trimmed_pca(data, weights, q)
    return EstimateBundle(mean, cov, corr, vals, comps)
