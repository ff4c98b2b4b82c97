import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline

from lambdatracer import BoxCoxTransformer, GaussianKDE, LambdaTracerClassifier
from lambdatracer.exceptions import ConfigError, DataError


@pytest.fixture
def xy():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.gamma(6, size=100), rng.gamma(2, size=100)]).reshape(-1, 1)
    y = np.array([1] * 100 + [0] * 100)
    return x, y


def test_get_params_and_clone():
    est = LambdaTracerClassifier(strategy="skew", C=2.0, class_weight="balanced")
    params = est.get_params()
    assert params["strategy"] == "skew" and params["C"] == 2.0
    twin = clone(est)
    assert twin.get_params() == params
    assert twin is not est
    assert clone(BoxCoxTransformer(strategy="kurt")).strategy == "kurt"
    assert clone(GaussianKDE(bandwidth=0.3)).bandwidth == 0.3


def test_classifier_fit_predict(xy):
    x, y = xy
    clf = LambdaTracerClassifier().fit(x, y)
    assert clf.classes_.tolist() == [0, 1]
    assert clf.score(x, y) > 0.75
    assert set(clf.predict(x)) <= {0, 1}
    assert clf.decision_function(x).shape == (200,)
    assert clf.n_features_in_ == 1


def test_string_labels(xy):
    x, y = xy
    labels = np.where(y == 1, "gen", "edit")
    clf = LambdaTracerClassifier(pos_label="gen").fit(x.ravel(), labels)
    assert set(clf.predict(x)) <= {"gen", "edit"}


def test_classifier_errors(xy):
    x, y = xy
    with pytest.raises(DataError):
        LambdaTracerClassifier().fit(x, np.zeros(200))
    with pytest.raises(DataError):
        LambdaTracerClassifier().fit(x, y[:10])
    with pytest.raises(ConfigError):
        LambdaTracerClassifier(class_weight="auto").fit(x, y)
    with pytest.raises(DataError):
        LambdaTracerClassifier().fit(np.hstack([x, x]), y)


def test_inside_sklearn_pipeline(xy):
    x, y = xy
    pipe = make_pipeline(BoxCoxTransformer(), LambdaTracerClassifier(transform="identity"))
    scores = cross_val_score(pipe, x, y, cv=3)
    assert scores.mean() > 0.7


def test_transformer_feature_names_out():
    est = BoxCoxTransformer().fit(np.random.default_rng(1).lognormal(size=(50, 1)))
    assert est.get_feature_names_out().tolist() == ["x0"]


def test_unfitted_raises():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        LambdaTracerClassifier().decision_function([1.0])
    with pytest.raises(NotFittedError):
        BoxCoxTransformer().transform([[1.0]])
