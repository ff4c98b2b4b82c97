"""One-dimensional linear SVM on calibrated losses.

Training chains three fitted steps: a Box-Cox exponent (or one of the fixed
ablation transforms), standardisation to zero mean and unit population
std, and a soft-margin linear SVM,

    minimise  0.5 * w**2 + C * sum_i omega_i * max(0, 1 - y_i * (w * t_i + b))

where y = +1 for generated and -1 for manipulated samples. With one
feature the problem has two unknowns. The default solver finds the bias
exactly for any weight and minimises the resulting convex profile over the
weight. A full-batch subgradient solver is available as an alternative.
Both are deterministic, so identical inputs give bitwise-identical models.

:func:`threshold_oracle` is the brute-force reference: it tries every
distinct cut point in both directions.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_losses
from .exceptions import ConfigError, DataError, DegenerateTransformError
from .loss_model import NEGATIVE, POSITIVE, LabeledLosses
from .metrics import confusion
from .transform import (
    DEFAULT_EPSILON,
    TRANSFORM_KINDS,
    TransformSpec,
    alt_transform,
    normalize_strategy,
    select_lambda,
)

LAMBDA_FIT_SOURCES = ("pooled", "positive", "negative")
SOLVERS = ("exact", "subgradient")


@dataclass(frozen=True)
class TrainConfig:
    strategy: str = "mle"
    transform: str = "boxcox"
    grid: tuple | None = None
    target: float | None = None
    epsilon: float = DEFAULT_EPSILON
    power_exponent: float | None = None
    c_param: float = 1.0
    iterations: int = 10_000
    seed: int = 0
    class_weighting: bool = False
    lambda_fit: str = "pooled"
    solver: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "strategy", normalize_strategy(self.strategy))
        if self.transform not in TRANSFORM_KINDS:
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(float(v) for v in check_grid(self.grid)))
        if not self.c_param > 0:
            raise ConfigError("c_param must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.lambda_fit not in LAMBDA_FIT_SOURCES:
            raise ConfigError(f"lambda_fit must be one of {LAMBDA_FIT_SOURCES}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}")


@dataclass(frozen=True)
class SvmModel:
    weight: float
    bias: float
    standardize_mean: float
    standardize_std: float
    lambda_spec: TransformSpec
    c_param: float = 1.0
    seed: int = 0
    strategy: str | None = None
    lambda_curve: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.standardize_std) and self.standardize_std > 0):
            raise ValueError("standardize_std must be positive")
        if not np.isfinite(self.weight):
            raise ValueError("weight must be finite")

    @property
    def lambda_star(self):
        return self.lambda_spec.lmbda

    def features(self, losses):
        x = check_losses(losses, name="losses", allow_negative=self.lambda_spec.kind in SIGNED_KINDS)
        return (_pre_standardize(x, self.lambda_spec) - self.standardize_mean) / self.standardize_std

    def decision_function(self, losses):
        return self.weight * self.features(losses) + self.bias

    def predict(self, losses):
        # A decision value of exactly 0 counts as generated.
        return [POSITIVE if d >= 0 else NEGATIVE for d in self.decision_function(losses)]

    def to_dict(self):
        return {
            "weight": self.weight,
            "bias": self.bias,
            "standardize_mean": self.standardize_mean,
            "standardize_std": self.standardize_std,
            "lambda_spec": self.lambda_spec.to_dict(),
            "c_param": self.c_param,
            "seed": self.seed,
            "strategy": self.strategy,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(
                float(obj["weight"]),
                float(obj["bias"]),
                float(obj["standardize_mean"]),
                float(obj["standardize_std"]),
                TransformSpec.from_dict(obj["lambda_spec"]),
                float(obj.get("c_param", 1.0)),
                int(obj.get("seed", 0)),
                obj.get("strategy"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed model: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed model JSON: {exc}") from exc


# Transforms defined on the whole real line; the others need nonnegative losses.
SIGNED_KINDS = ("identity", "zscore", "exp")


def _pre_standardize(x, spec):
    # Standardisation follows, so a z-score is the identity up to that affine map;
    # applying it per batch would leak prediction-time statistics.
    if spec.kind == "zscore":
        return x.astype(np.float64, copy=True)
    return alt_transform(x, spec)


def fit_transform_spec(data, config):
    """Choose the transform for ``data`` according to ``config``.

    Returns ``(spec, search_result_or_None)``.
    """
    if config.transform != "boxcox":
        return TransformSpec.alt(config.transform, config.power_exponent, config.epsilon), None
    if config.lambda_fit == "pooled":
        source = data.losses
    else:
        want = POSITIVE if config.lambda_fit == "positive" else NEGATIVE
        source = data.losses[[lab == want for lab in data.labels]]
    search = select_lambda(source, config.strategy, config.grid, config.target, config.epsilon)
    return TransformSpec.boxcox(search.lambda_star, config.epsilon), search


def class_weights(y, enabled):
    """Inverse-frequency weights ``n / (2 * n_label)``; all ones when disabled."""
    if not enabled:
        return np.ones_like(y)
    n = y.size
    n_pos = np.count_nonzero(y > 0)
    n_neg = n - n_pos
    return np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * n_neg))


def hinge_objective(w, b, t, y, omega, c_param):
    return 0.5 * w * w + c_param * float(np.sum(omega * np.maximum(0.0, 1.0 - y * (w * t + b))))


def optimal_bias(w, t, y, omega):
    """Exact minimiser over ``b`` of the hinge term for a fixed ``w``.

    The hinge sum is piecewise linear in ``b`` with a kink at ``y_i - w*t_i``
    for each sample. Its slope steps up by ``omega_i`` at every kink, so
    the minimum sits at the first kink where the slope becomes nonnegative.
    A flat stretch resolves to its midpoint.
    """
    kinks = y - w * t
    order = np.argsort(kinks, kind="stable")
    k = kinks[order]
    wt = omega[order]
    pos = y[order] > 0
    # Slope just right of kink j: -(positive weight strictly right) + (negative weight at or left).
    pos_right = np.sum(wt[pos]) - np.cumsum(np.where(pos, wt, 0.0))
    neg_left = np.cumsum(np.where(pos, 0.0, wt))
    slope = neg_left - pos_right
    j = int(np.searchsorted(slope, 0.0, side="left"))
    j = min(j, k.size - 1)
    if slope[j] == 0.0 and j + 1 < k.size:
        return 0.5 * (k[j] + k[j + 1])
    return float(k[j])


def _fit_exact(t, y, omega, c_param):
    def profile(w):
        return hinge_objective(w, optimal_bias(w, t, y, omega), t, y, omega, c_param)

    # The objective at w = b = 0 is C * sum(omega), which bounds 0.5 * w**2 at the optimum.
    radius = np.sqrt(2.0 * c_param * np.sum(omega)) + 1.0
    res = minimize_scalar(profile, bounds=(-radius, radius), method="bounded",
                          options={"xatol": 1e-10 * radius, "maxiter": 500})
    w = float(res.x)
    return w, float(optimal_bias(w, t, y, omega))


def _fit_subgradient(t, y, omega, c_param, iterations):
    # Objective scaled by 1 / (C * sum(omega)) so subgradients are O(1); step 1/sqrt(k).
    scale = c_param * float(np.sum(omega))
    cw = c_param * omega * y / scale
    w = b = 0.0
    best_obj, best_w, best_b = np.inf, w, b
    for it in range(1, iterations + 1):
        slack = 1.0 - y * (w * t + b)
        active = slack > 0
        obj = 0.5 * w * w + c_param * float(np.dot(omega[active], slack[active]))
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w, b
        gw = w / scale - float(np.dot(cw[active], t[active]))
        gb = -float(np.sum(cw[active]))
        eta = 1.0 / np.sqrt(it)
        w -= eta * gw
        b -= eta * gb
    if hinge_objective(w, b, t, y, omega, c_param) < best_obj:
        best_w, best_b = w, b
    return best_w, best_b


def fit_linear_svm(t, y, *, c_param=1.0, iterations=10_000, omega=None, solver="exact"):
    """Minimise the 1-D soft-margin objective. Returns ``(w, b)``.

    ``solver="exact"`` minimises the convex profile ``min_b F(w, b)`` over
    ``w`` with the bias solved exactly at each step. ``"subgradient"`` runs
    ``iterations`` full-batch subgradient steps and keeps the best iterate.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    omega = np.ones_like(y) if omega is None else np.asarray(omega, dtype=np.float64)
    if solver == "exact":
        return _fit_exact(t, y, omega, c_param)
    if solver == "subgradient":
        return _fit_subgradient(t, y, omega, c_param, iterations)
    raise ConfigError(f"unknown solver {solver!r}")


def train(data, config=None):
    config = config or TrainConfig()
    if not isinstance(data, LabeledLosses):
        raise TypeError("train expects LabeledLosses")
    data.check_trainable(2)
    check_losses(data.losses, name="losses", allow_negative=config.transform in SIGNED_KINDS)
    spec, search = fit_transform_spec(data, config)
    t = _pre_standardize(data.losses, spec)
    mean = float(np.mean(t))
    std = float(np.std(t))
    if not (np.isfinite(std) and std > 0) or not np.isfinite(mean):
        raise DegenerateTransformError("degenerate transform: transformed losses have zero variance")
    s = (t - mean) / std
    y = data.y
    w, b = fit_linear_svm(
        s, y, c_param=config.c_param, iterations=config.iterations,
        omega=class_weights(y, config.class_weighting), solver=config.solver,
    )
    return SvmModel(
        float(w), float(b), mean, std, spec, float(config.c_param), int(config.seed),
        config.strategy if spec.kind == "boxcox" else None,
        search.objective_curve if search is not None else (),
    )


def predict(model, losses):
    return model.predict(losses)


def training_accuracy(model, data):
    preds = model.predict(data.losses)
    return float(np.mean([p == t for p, t in zip(preds, data.labels)]))


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    direction: str
    confusion: object

    @property
    def accuracy(self):
        return self.confusion.accuracy

    def predict(self, losses):
        x = np.asarray(losses, dtype=np.float64)
        above = x > self.threshold
        pos = above if self.direction == "pos_above" else ~above
        return [POSITIVE if p else NEGATIVE for p in pos]


def threshold_oracle(data):
    """Best single cut point on the raw losses, by exhaustive search.

    Candidates are -inf, every midpoint between consecutive distinct
    losses, and +inf. ``pos_above`` predicts generated for
    ``loss > threshold``; ``pos_below`` for ``loss <= threshold``. The
    smallest threshold wins ties, and ``pos_above`` before ``pos_below``.
    """
    x = np.asarray(data.losses, dtype=np.float64)
    is_pos = np.array([lab == POSITIVE for lab in data.labels])
    if not is_pos.any() or is_pos.all():
        raise DataError("threshold oracle needs both labels")
    distinct = np.unique(x)
    mids = (distinct[:-1] + distinct[1:]) / 2.0
    thresholds = np.concatenate([[-np.inf], mids, [np.inf]])

    order = np.argsort(x, kind="stable")
    xs = x[order]
    ps = is_pos[order]
    # Samples at or below each threshold.
    below = np.searchsorted(xs, thresholds, side="right")
    pos_cum = np.concatenate([[0], np.cumsum(ps)])
    neg_cum = np.concatenate([[0], np.cumsum(~ps)])
    n_pos, n_neg = pos_cum[-1], neg_cum[-1]
    pos_below = pos_cum[below]
    neg_below = neg_cum[below]
    # pos_above: generated iff x > thr, so correct = negatives below + positives above.
    correct_above = neg_below + (n_pos - pos_below)
    correct_below = pos_below + (n_neg - neg_below)

    best = -1
    best_thr, best_dir = None, None
    for i, thr in enumerate(thresholds):
        if correct_above[i] > best:
            best, best_thr, best_dir = correct_above[i], float(thr), "pos_above"
        if correct_below[i] > best:
            best, best_thr, best_dir = correct_below[i], float(thr), "pos_below"
    result = ThresholdResult(best_thr, best_dir, None)
    counts = confusion(result.predict(x), data.labels, NEGATIVE)
    return replace(result, confusion=counts)


def split_indices(data, seed=0, train_fraction=0.5):
    """Deterministic stratified split keyed on a hash of (seed, category, id).

    Within each label, samples are ordered by hash and the first
    ``round(train_fraction * n_label)`` go to training. Index lists come
    back in original order.
    """
    if not 0 < train_fraction < 1:
        raise ConfigError("train_fraction must be in (0, 1)")
    ids = data.ids or tuple(str(i) for i in range(len(data)))
    cats = data.categories or ("",) * len(data)

    def key(i):
        token = f"{seed}\x1f{cats[i]}\x1f{ids[i]}".encode("utf-8")
        return hashlib.blake2b(token, digest_size=8).digest(), i

    train_idx = []
    for label in (POSITIVE, NEGATIVE):
        members = sorted((i for i, lab in enumerate(data.labels) if lab == label), key=key)
        train_idx.extend(members[: int(round(train_fraction * len(members)))])
    train_set = set(train_idx)
    test_idx = [i for i in range(len(data)) if i not in train_set]
    return sorted(train_idx), test_idx


class LambdaTracerClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`train` for scikit-learn pipelines.

    ``X`` holds raw nonnegative losses (1-D or one column) and ``y`` any
    binary labels. ``pos_label`` marks the generated class.
    """

    def __init__(self, strategy="mle", transform="boxcox", grid=None, target=None,
                 epsilon=DEFAULT_EPSILON, power_exponent=None, C=1.0, max_iter=10_000,
                 class_weight=None, lambda_fit="pooled", solver="exact", pos_label=1,
                 random_state=0):
        self.strategy = strategy
        self.transform = transform
        self.grid = grid
        self.target = target
        self.epsilon = epsilon
        self.power_exponent = power_exponent
        self.C = C
        self.max_iter = max_iter
        self.class_weight = class_weight
        self.lambda_fit = lambda_fit
        self.solver = solver
        self.pos_label = pos_label
        self.random_state = random_state

    def _config(self):
        if self.class_weight not in (None, "balanced"):
            raise ConfigError("class_weight must be None or 'balanced'")
        return TrainConfig(
            strategy=self.strategy, transform=self.transform,
            grid=None if self.grid is None else tuple(self.grid), target=self.target,
            epsilon=self.epsilon, power_exponent=self.power_exponent, c_param=self.C,
            iterations=self.max_iter, seed=self.random_state,
            class_weighting=self.class_weight == "balanced", lambda_fit=self.lambda_fit,
            solver=self.solver,
        )

    def fit(self, X, y):
        x = check_losses(X, min_samples=2, allow_negative=self.transform in SIGNED_KINDS)
        y = np.asarray(y)
        if y.shape[0] != x.shape[0]:
            raise DataError("X and y differ in length")
        self.classes_ = unique_labels(y)
        if len(self.classes_) != 2 or self.pos_label not in self.classes_:
            raise DataError(f"need two classes including pos_label={self.pos_label!r}, got {self.classes_}")
        labels = tuple(POSITIVE if v == self.pos_label else NEGATIVE for v in y)
        self.model_ = train(LabeledLosses(x, labels), self._config())
        self.lambda_ = self.model_.lambda_star
        self.n_features_in_ = 1
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.decision_function(X)

    def predict(self, X):
        neg_label = self.classes_[self.classes_ != self.pos_label][0]
        d = self.decision_function(X)
        return np.where(d >= 0, self.pos_label, neg_label).astype(self.classes_.dtype)
