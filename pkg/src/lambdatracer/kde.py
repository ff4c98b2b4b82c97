"""Gaussian kernel density estimates and the overlap coefficient.

The overlap of two densities is the area under their pointwise minimum. It
is 1 for identical distributions and 0 for disjoint ones, and is computed
here by the trapezoidal rule on a window that extends five bandwidths past
the pooled samples on each side.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_losses, check_positive
from .exceptions import DataError

_SQRT_2PI = np.sqrt(2.0 * np.pi)

DEFAULT_GRID_POINTS = 2048
WINDOW_BANDWIDTHS = 5.0
# Bounds the (grid x samples) temporary during evaluation.
_CHUNK = 1 << 20


def silverman_bandwidth(x):
    """Silverman's rule of thumb, ``0.9 * min(std, IQR/1.34) * n**-0.2``.

    ``std`` is the sample (ddof=1) standard deviation. When the IQR is zero
    but the spread is not, the IQR term is ignored. Returns 0.0 when the
    sample has no spread at all.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2:
        return 0.0
    std = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * spread * n ** (-0.2)


@dataclass(frozen=True)
class KdeEstimate:
    points: np.ndarray
    bandwidth: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).ravel()
        if pts.size == 0:
            raise DataError("KDE needs at least one point")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @property
    def n(self):
        return self.points.size

    def __call__(self, x):
        return kde_eval(self, x)


def kde_fit(samples, bandwidth=None):
    points = check_losses(samples, name="samples", allow_negative=True)
    if bandwidth is not None:
        h = check_positive(bandwidth, "bandwidth")
    else:
        h = silverman_bandwidth(points)
        if h <= 0:
            h = max(abs(float(points.mean())), 1.0) * 1e-3
            warnings.warn(
                f"samples have zero variance; falling back to bandwidth {h:g}",
                RuntimeWarning,
                stacklevel=2,
            )
    return KdeEstimate(points, h)


def kde_eval(kde, x):
    """Density at ``x`` (scalar or array); exact sum over every kernel."""
    xs = np.asarray(x, dtype=np.float64)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).ravel()
    pts = kde.points
    h = kde.bandwidth
    out = np.empty(xs.size, dtype=np.float64)
    step = max(1, _CHUNK // pts.size)
    for start in range(0, xs.size, step):
        block = xs[start:start + step]
        u = (block[:, None] - pts[None, :]) / h
        out[start:start + step] = np.exp(-0.5 * u * u).sum(axis=1)
    out /= pts.size * h * _SQRT_2PI
    return float(out[0]) if scalar else out


def integration_grid(a, b, grid_points=DEFAULT_GRID_POINTS):
    h = max(a.bandwidth, b.bandwidth)
    lo = min(a.points.min(), b.points.min()) - WINDOW_BANDWIDTHS * h
    hi = max(a.points.max(), b.points.max()) + WINDOW_BANDWIDTHS * h
    return np.linspace(lo, hi, int(grid_points))


def overlap(a, b, grid_points=DEFAULT_GRID_POINTS):
    """Overlap coefficient of two KDEs, clamped to [0, 1]."""
    if int(grid_points) < 16:
        raise ValueError(f"grid_points must be >= 16, got {grid_points}")
    grid = integration_grid(a, b, grid_points)
    lower = np.minimum(kde_eval(a, grid), kde_eval(b, grid))
    area = float(np.trapezoid(lower, grid))
    return min(max(area, 0.0), 1.0)


@dataclass(frozen=True)
class OverlapMatrix:
    categories: tuple
    values: np.ndarray

    def to_csv(self):
        lines = [",".join(("category",) + tuple(self.categories))]
        for name, row in zip(self.categories, self.values):
            lines.append(",".join([name] + [f"{v:.4f}" for v in row]))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"categories": list(self.categories), "values": self.values.tolist()}


def overlap_matrix(ds, bandwidth=None, grid_points=DEFAULT_GRID_POINTS, threads=1):
    """Pairwise overlap of per-category KDEs, in category order of first appearance.

    Each cell is computed independently on its own grid, so the result does
    not depend on ``threads``.
    """
    groups = ds.by_category()
    for name, losses in groups.items():
        if losses.size < 2:
            raise DataError(f"category {name!r} has {losses.size} sample(s); overlap needs at least 2")
    names = tuple(groups)
    kdes = [kde_fit(groups[c], bandwidth) for c in names]
    k = len(names)
    pairs = [(i, j) for i in range(k) for j in range(i, k)]

    def cell(ij):
        return overlap(kdes[ij[0]], kdes[ij[1]], grid_points)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(cell, pairs))
    else:
        cells = [cell(p) for p in pairs]
    values = np.empty((k, k))
    for (i, j), v in zip(pairs, cells):
        values[i, j] = values[j, i] = v
    return OverlapMatrix(names, values)


class GaussianKDE(BaseEstimator):
    """Estimator wrapper around :func:`kde_fit` / :func:`kde_eval`.

    ``score_samples`` returns log-density, following scikit-learn's
    ``KernelDensity``.
    """

    def __init__(self, bandwidth=None):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        self.kde_ = kde_fit(check_losses(X, allow_negative=True), self.bandwidth)
        self.bandwidth_ = self.kde_.bandwidth
        return self

    def pdf(self, X):
        check_is_fitted(self, "kde_")
        return kde_eval(self.kde_, check_losses(X, allow_negative=True))

    def score_samples(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(X))

    def overlap(self, other, grid_points=DEFAULT_GRID_POINTS):
        check_is_fitted(self, "kde_")
        check_is_fitted(other, "kde_")
        return overlap(self.kde_, other.kde_, grid_points)
