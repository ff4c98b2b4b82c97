"""Box-Cox calibration of reconstruction losses.

Losses are shifted by a small epsilon so zeros stay in the domain, then
mapped through ``T(x) = (x**lam - 1) / lam`` (``log x`` at ``lam == 0``).
``lam`` is chosen by scanning a fixed grid with one of three objectives:

``mle``
    Gaussian profile log-likelihood, maximised.
``skewness``
    ``|skew(T(x)) - target|``, minimised (target defaults to 0).
``kurtosis``
    ``|kurt(T(x)) - target|``, minimised (target defaults to 1). Population
    kurtosis is bounded below by 1, so the default is plain minimisation.

The scan keeps the first grid value that attains the optimum: a later value
must be strictly better to replace it.

The fixed transforms used for ablations (z-score, log, exp, power) live in
:func:`alt_transform`.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_losses, check_positive
from .exceptions import ConfigError, DataError, DegenerateTransformError

DEFAULT_EPSILON = 1e-8
EXP_OVERFLOW_LIMIT = 700.0

STRATEGIES = ("mle", "skewness", "kurtosis")
_STRATEGY_ALIASES = {"mle": "mle", "skew": "skewness", "skewness": "skewness",
                     "kurt": "kurtosis", "kurtosis": "kurtosis"}
DEFAULT_TARGETS = {"skewness": 0.0, "kurtosis": 1.0}

TRANSFORM_KINDS = ("boxcox", "zscore", "log", "exp", "power", "identity")
DEFAULT_POWER = 0.5


def default_grid():
    """-5.00, -4.99, ..., 5.00 (1001 points, each the double nearest its decimal)."""
    return np.arange(-500, 501) / 100.0


def normalize_strategy(name):
    try:
        return _STRATEGY_ALIASES[name]
    except KeyError:
        raise ConfigError(f"unknown lambda strategy {name!r}; choose from {STRATEGIES}") from None


@dataclass(frozen=True)
class TransformSpec:
    kind: str = "identity"
    lmbda: float | None = None
    power_exponent: float | None = None
    shift_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ConfigError(f"unknown transform kind {self.kind!r}")
        if (self.lmbda is not None) != (self.kind == "boxcox"):
            raise ConfigError("lmbda must be set exactly when kind == 'boxcox'")
        if (self.power_exponent is not None) != (self.kind == "power"):
            raise ConfigError("power_exponent must be set exactly when kind == 'power'")
        if not (np.isfinite(self.shift_epsilon) and self.shift_epsilon > 0):
            raise ConfigError("shift_epsilon must be positive")

    @classmethod
    def boxcox(cls, lmbda, shift_epsilon=DEFAULT_EPSILON):
        return cls("boxcox", lmbda=float(lmbda), shift_epsilon=shift_epsilon)

    @classmethod
    def alt(cls, kind, power_exponent=None, shift_epsilon=DEFAULT_EPSILON):
        if kind == "power" and power_exponent is None:
            power_exponent = DEFAULT_POWER
        return cls(kind, power_exponent=power_exponent, shift_epsilon=shift_epsilon)

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lmbda,
                "power_exponent": self.power_exponent, "shift_epsilon": self.shift_epsilon}

    @classmethod
    def from_dict(cls, obj):
        return cls(obj["kind"], obj.get("lambda"), obj.get("power_exponent"),
                   obj.get("shift_epsilon", DEFAULT_EPSILON))


@dataclass(frozen=True)
class LambdaSearchResult:
    lambda_star: float
    objective_curve: tuple
    strategy: str
    target: float | None = None
    epsilon: float = DEFAULT_EPSILON

    def to_dict(self):
        return {
            "lambda_star": self.lambda_star,
            "strategy": self.strategy,
            "target": self.target,
            "epsilon": self.epsilon,
            "objective_curve": [[lam, _json_float(obj)] for lam, obj in self.objective_curve],
        }


def _json_float(v):
    # JSON has no infinities; degenerate grid points are written as null.
    return v if np.isfinite(v) else None


# -- elementwise transforms ------------------------------------------------


def shift_positive(x, epsilon=DEFAULT_EPSILON):
    epsilon = check_positive(epsilon, "epsilon")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0):
        raise DataError("shift_positive expects nonnegative values")
    return arr + epsilon


def boxcox_apply(x, lmbda):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise DataError("Box-Cox requires strictly positive inputs")
    if lmbda == 0:
        return np.log(arr)
    if lmbda == 1:
        return arr - 1.0
    # Written as log(x) * expm1(u) / u so precision holds as lmbda -> 0,
    # including subnormal lmbda where u = lmbda * log(x) underflows to 0.
    logx = np.log(arr)
    u = lmbda * logx
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(u == 0, 1.0, np.expm1(u) / np.where(u == 0, 1.0, u))
    return logx * ratio


def boxcox_inverse(t, lmbda):
    t = np.asarray(t, dtype=np.float64)
    if lmbda == 0:
        return np.exp(t)
    v = lmbda * t
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(v == 0, 1.0, np.log1p(v) / np.where(v == 0, 1.0, v))
    return np.exp(t * ratio)


# -- moments ---------------------------------------------------------------


def _standardized(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise DataError("moments need at least 2 values")
    mu = x.mean()
    sigma = np.sqrt(np.mean((x - mu) ** 2))
    if not sigma > 0:
        raise DegenerateTransformError("zero variance")
    return (x - mu) / sigma


def skewness(x):
    """Population skewness, third standardised moment (divide by n)."""
    return float(np.mean(_standardized(x) ** 3))


def kurtosis(x):
    """Population kurtosis, fourth standardised moment. Not excess: a normal gives 3."""
    return float(np.mean(_standardized(x) ** 4))


# -- objectives ------------------------------------------------------------


def _scaled_power(logx, lmbda):
    """An affine image of T_lmbda(x) that neither overflows nor cancels.

    Returns ``(v, log_scale, sign)`` with ``T(x) = sign * exp(log_scale) * v + const``.
    The anchor is the log-value that keeps every ``lmbda * (logx - ref)`` at
    or below zero, so ``v`` lies in (-1, 0].
    """
    if lmbda == 0:
        return logx, 0.0, 1.0
    ref = logx.max() if lmbda > 0 else logx.min()
    v = np.expm1(lmbda * (logx - ref))
    return v, lmbda * ref - np.log(abs(lmbda)), float(np.sign(lmbda))


def boxcox_loglik(x, lmbda):
    """Gaussian profile log-likelihood of the Box-Cox transformed sample.

    ``-(n/2) * log(var(T(x))) + (lmbda - 1) * sum(log x)`` with population
    variance. Returns ``-inf`` when the transformed data has no spread.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0):
        raise DataError("Box-Cox requires strictly positive inputs")
    n = arr.size
    if n < 2:
        raise DataError("log-likelihood needs at least 2 values")
    logx = np.log(arr)
    return _loglik_from_log(logx, lmbda)


def _loglik_from_log(logx, lmbda):
    v, log_scale, _ = _scaled_power(logx, lmbda)
    var = np.var(v)
    if not (var > 0 and np.isfinite(var)):
        return -np.inf
    log_var = np.log(var) + 2.0 * log_scale
    return float(-0.5 * logx.size * log_var + (lmbda - 1.0) * logx.sum())


def _moment_from_log(logx, lmbda, order):
    v, _, sign = _scaled_power(logx, lmbda)
    try:
        z = _standardized(v)
    except DegenerateTransformError:
        return np.nan
    m = float(np.mean(z ** order))
    return sign * m if order == 3 else m


def select_lambda(x, strategy="mle", grid=None, target=None, epsilon=DEFAULT_EPSILON):
    """Scan ``grid`` in order and return the best Box-Cox exponent.

    ``x`` are raw nonnegative losses; they are shifted by ``epsilon`` once
    before any objective is evaluated.
    """
    strategy = normalize_strategy(strategy)
    grid = default_grid() if grid is None else check_grid(grid)
    if strategy != "mle" and target is None:
        target = DEFAULT_TARGETS[strategy]
    if strategy == "mle":
        target = None
    shifted = shift_positive(check_losses(x, min_samples=2), epsilon)
    logx = np.log(shifted)

    curve = []
    best_lam = None
    if strategy == "mle":
        best = -np.inf
        for lam in grid:
            lam = float(lam)
            score = _loglik_from_log(logx, lam)
            curve.append((lam, score))
            if score > best:
                best, best_lam = score, lam
    else:
        order = 3 if strategy == "skewness" else 4
        best = np.inf
        for lam in grid:
            lam = float(lam)
            moment = _moment_from_log(logx, lam, order)
            score = abs(moment - target) if np.isfinite(moment) else np.inf
            curve.append((lam, score))
            if score < best:
                best, best_lam = score, lam
    if best_lam is None:
        raise DegenerateTransformError(
            "degenerate transform: transformed losses have zero variance for every lambda"
        )
    return LambdaSearchResult(best_lam, tuple(curve), strategy, target, float(epsilon))


# -- fixed transforms ------------------------------------------------------


def alt_transform(x, spec):
    """Apply ``spec`` elementwise. ``identity`` returns the input values unchanged."""
    arr = np.asarray(x, dtype=np.float64)
    kind = spec.kind
    eps = spec.shift_epsilon
    if kind == "identity":
        return arr.copy()
    if kind == "zscore":
        z = _standardized(arr) if arr.size >= 2 else None
        if z is None:
            raise DataError("z-score needs at least 2 values")
        return z
    if kind == "log":
        base = arr + eps
        if np.any(base <= 0):
            raise DataError("log transform needs x + epsilon > 0")
        return np.log(base)
    if kind == "exp":
        if np.any(arr > EXP_OVERFLOW_LIMIT):
            raise DataError(f"exp transform overflows for inputs above {EXP_OVERFLOW_LIMIT:g}")
        return np.exp(arr)
    if kind == "power":
        base = arr + eps
        p = spec.power_exponent
        if np.any(base < 0) or (np.any(base == 0) and p <= 0):
            raise DataError("power transform needs a positive base")
        return base ** p
    if kind == "boxcox":
        return boxcox_apply(shift_positive(arr, eps), spec.lmbda)
    raise ConfigError(f"unknown transform kind {kind!r}")


apply_transform = alt_transform


class BoxCoxTransformer(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Grid-scanned Box-Cox transform for a single column of losses.

    Parameters
    ----------
    strategy : {"mle", "skewness", "kurtosis"}
    grid : array-like, optional
        Candidate exponents, scanned in the given order. Defaults to
        ``default_grid()``.
    target : float, optional
        Moment target for the skewness/kurtosis strategies.
    epsilon : float
        Shift added to every loss before transforming.

    Attributes
    ----------
    lambda_ : float
    search_ : LambdaSearchResult
    """

    def __init__(self, strategy="mle", grid=None, target=None, epsilon=DEFAULT_EPSILON):
        self.strategy = strategy
        self.grid = grid
        self.target = target
        self.epsilon = epsilon

    def fit(self, X, y=None):
        x = check_losses(X, min_samples=2)
        self.search_ = select_lambda(x, self.strategy, self.grid, self.target, self.epsilon)
        self.lambda_ = self.search_.lambda_star
        self.n_features_in_ = 1
        return self

    def _reshape_like(self, X, out):
        return out.reshape(-1, 1) if np.ndim(X) == 2 else out

    def transform(self, X):
        check_is_fitted(self, "lambda_")
        x = check_losses(X)
        return self._reshape_like(X, boxcox_apply(shift_positive(x, self.epsilon), self.lambda_))

    def inverse_transform(self, X):
        check_is_fitted(self, "lambda_")
        t = np.asarray(X, dtype=np.float64)
        out = boxcox_inverse(t.ravel(), self.lambda_) - self.epsilon
        return out.reshape(t.shape)

    @property
    def spec_(self):
        check_is_fitted(self, "lambda_")
        return TransformSpec.boxcox(self.lambda_, self.epsilon)
