"""Shared data types, seeded random streams and inner-product geometry.

Observations are rows of an ``n x d`` matrix. When a :class:`Grid` is
attached the rows are curves sampled on it and inner products use
trapezoidal weights; otherwise plain Euclidean geometry applies.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

DIRECTION_LAWS = ("white", "brownian")


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing sampling locations of a discretised curve."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(np.ravel(self.points))
        if pts.size < 2:
            raise ValueError("a grid needs at least 2 points")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be finite and strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, start=0.0, stop=1.0, size=101):
        return cls(np.linspace(start, stop, size))

    def __len__(self):
        return self.points.size

    @property
    def spacing(self):
        return np.diff(self.points)

    @property
    def weights(self):
        """Trapezoidal quadrature weights, one per grid point."""
        sp = self.spacing
        w = np.zeros(self.points.size)
        w[:-1] += sp / 2
        w[1:] += sp / 2
        return w


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Rows are observations.

    ``labels`` is an optional boolean mask with ``True`` marking a row drawn
    from the contaminating distribution (an outlier) and ``False`` a core row.
    """

    values: np.ndarray
    grid: Grid | None = None
    labels: np.ndarray | None = None
    row_names: tuple | None = None

    def __post_init__(self):
        x = np.array(self.values, dtype=np.float64, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("values must be a non-empty n x d matrix")
        if not np.all(np.isfinite(x)):
            raise ValueError("values must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "values", x)
        if self.grid is not None and len(self.grid) != x.shape[1]:
            raise ValueError(f"grid has {len(self.grid)} points but data has {x.shape[1]} columns")
        if self.labels is not None:
            lab = _frozen(self.labels, dtype=bool)
            if lab.shape != (x.shape[0],):
                raise ValueError("labels must have one entry per row")
            object.__setattr__(self, "labels", lab)
        if self.row_names is not None:
            names = tuple(str(s) for s in self.row_names)
            if len(names) != x.shape[0]:
                raise ValueError("row_names must have one entry per row")
            object.__setattr__(self, "row_names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def functional(self):
        return self.grid is not None

    def quadrature_weights(self):
        """Per-coordinate weights of the inner product (ones in vector mode)."""
        return self.grid.weights if self.grid is not None else np.ones(self.d)

    def metric_values(self):
        """Rows rescaled so that Euclidean geometry equals the data's geometry."""
        if self.grid is None:
            return self.values
        return self.values * np.sqrt(self.grid.weights)


# --- randomness -----------------------------------------------------------


def derive_seed(*parts):
    """64-bit seed from a tuple of ints/strings (blake2b; platform independent)."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Named, reproducible random stream.

    The same ``(seed, label)`` always yields the same draws; different labels
    give unrelated Philox keys.
    """

    seed: int
    label: str = "directions"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "seed", int(self.seed))

    def generator(self):
        h = hashlib.blake2b(f"{self.seed}/{self.label}".encode(), digest_size=16)
        key = int.from_bytes(h.digest(), "little")
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *parts):
        return RngStream(derive_seed(self.seed, self.label, *parts), self.label)


# --- geometry -------------------------------------------------------------


def inner_product(x, h, grid=None):
    """<x, h>: trapezoidal L2 inner product on ``grid``, else the dot product."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.shape != h.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {h.shape}")
    if grid is None:
        return float(x @ h)
    if len(grid) != x.size:
        raise ValueError("grid length does not match vector length")
    return float((x * grid.weights) @ h)


def norm(x, grid=None):
    return float(np.sqrt(inner_product(x, x, grid)))


def random_unit_direction(rng, d, law="white", grid=None):
    """Draw a direction of unit norm.

    ``white`` normalises ``d`` i.i.d. standard normals (uniform on the sphere
    in vector mode). ``brownian`` normalises a discretised Brownian path, so
    the direction is a rough-but-continuous curve.

    ``rng`` is a :class:`numpy.random.Generator` (advanced in place) or an
    :class:`RngStream` (a fresh generator, so the call is pure).
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if law not in DIRECTION_LAWS:
        raise ValueError(f"unknown direction law {law!r}")
    if isinstance(rng, RngStream):
        rng = rng.generator()
    if grid is not None and len(grid) != d:
        raise ValueError("grid length does not match d")
    while True:
        z = rng.standard_normal(d)
        if law == "brownian":
            if grid is not None:
                steps = np.concatenate(([grid.spacing[0]], grid.spacing))
            else:
                steps = np.full(d, 1.0 / d)
            z = np.cumsum(z * np.sqrt(steps))
        nz = norm(z, grid)
        if nz > 0:
            return z / nz


def direction_stream(stream, d, law="white", grid=None):
    """Endless iterator of unit directions drawn from one stream."""
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    while True:
        yield random_unit_direction(rng, d, law, grid)


# --- small dense linear algebra -------------------------------------------


def symmetric_eigendecomposition(m):
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order.

    Each eigenvector is signed so that its largest-magnitude entry is
    nonnegative. Returns ``(eigenvalues, vectors)`` with vectors as columns.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-9 * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


def cholesky(m):
    """Lower Cholesky factor; one diagonal jitter of 1e-10*trace/d on failure."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(m, m.T, rtol=1e-12, atol=0):
        raise ValueError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    d = m.shape[0]
    jitter = 1e-10 * np.trace(m) / d
    try:
        return np.linalg.cholesky(m + jitter * np.eye(d))
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("matrix is not positive definite, even after jitter") from None
