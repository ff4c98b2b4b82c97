import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lambdatracer.exceptions import ConfigError, DataError, DegenerateTransformError
from lambdatracer.transform import (
    BoxCoxTransformer,
    LambdaSearchResult,
    TransformSpec,
    alt_transform,
    boxcox_apply,
    boxcox_inverse,
    boxcox_loglik,
    default_grid,
    kurtosis,
    select_lambda,
    shift_positive,
    skewness,
)


@pytest.mark.parametrize("x, lam, expected", [(5.0, 1, 4.0), (math.e, 0, 1.0), (3.0, 2, 4.0)])
def test_boxcox_examples(x, lam, expected):
    assert boxcox_apply([x], lam)[0] == pytest.approx(expected, rel=1e-15)


def test_boxcox_rejects_nonpositive():
    with pytest.raises(DataError):
        boxcox_apply([0.0], 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(-5, 5))
def test_boxcox_matches_scalar_formula(y, lam):
    got = boxcox_apply([y], lam)[0]
    ref = oracles.boxcox_scalar(y, lam)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1.0), st.floats(-5, 5))
def test_boxcox_monotone(a, frac, lam):
    b = a * (1 + frac)
    ta, tb = boxcox_apply([a], lam)[0], boxcox_apply([b], lam)[0]
    assert tb >= ta
    # Strict order is only representable when the exact gap exceeds a few ulps.
    if float(oracles.boxcox_mp(b, lam) - oracles.boxcox_mp(a, lam)) > 4 * math.ulp(abs(ta)):
        assert tb > ta


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1e2), st.floats(-2, 2))
def test_boxcox_inverse_roundtrip(y, lam):
    t = boxcox_apply([y], lam)
    assert boxcox_inverse(t, lam)[0] == pytest.approx(y, rel=1e-9)


def test_continuity_at_zero():
    y = np.geomspace(1e-6, 1e3, 500)
    assert np.max(np.abs(boxcox_apply(y, 1e-7) - np.log(y))) <= 1e-5


def test_shift_positive():
    out = shift_positive([0.0, 0.5], 1e-8)
    assert out[0] == 1e-8
    assert out[1] == 0.50000001
    with pytest.raises(DataError):
        shift_positive([-1.0])
    with pytest.raises(ValueError):
        shift_positive([1.0], 0.0)


def test_moment_examples():
    assert skewness([1, 2, 3]) == pytest.approx(0.0, abs=1e-15)
    assert skewness([0, 0, 0, 1]) == pytest.approx(1.1547005383792515, rel=1e-12)
    assert kurtosis([-1, 1]) == pytest.approx(1.0)
    assert kurtosis([1, 2, 3]) == pytest.approx(1.5)


def test_moment_errors():
    with pytest.raises(DegenerateTransformError):
        skewness([2.0, 2.0])
    with pytest.raises(DataError):
        kurtosis([1.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=20).filter(lambda v: len(set(v)) > 1))
def test_moments_match_exact_rationals(values):
    s, k = exact_skew_kurt = oracles.exact_moments(values)
    assert skewness(values) == pytest.approx(s, rel=1e-9, abs=1e-12)
    assert kurtosis(values) == pytest.approx(k, rel=1e-9)
    assert exact_skew_kurt[1] >= 1.0 - 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30).filter(lambda v: np.std(v) > 1e-3),
       st.floats(0.01, 100), st.floats(-100, 100))
def test_moments_affine_invariant(x, a, b):
    y = a * np.asarray(x) + b
    assert skewness(y) == pytest.approx(skewness(x), abs=1e-9)
    assert kurtosis(y) == pytest.approx(kurtosis(x), abs=1e-9)


def test_loglik_examples():
    assert boxcox_loglik([2.0, 2.0, 2.0], 0.5) == -np.inf
    x = np.exp([-1.0, 0.0, 1.0])
    assert boxcox_loglik(x, 0.0) == pytest.approx(-1.5 * math.log(2 / 3))


@pytest.mark.parametrize("lam", [-4.5, -1.0, 0.3, 1.0, 2.5, 5.0])
def test_loglik_matches_direct(lam):
    rng = np.random.default_rng(6)
    x = rng.gamma(3.0, size=200)
    t = np.array([oracles.boxcox_scalar(v, lam) for v in x])
    ref = -0.5 * x.size * math.log(np.var(t)) + (lam - 1) * np.sum(np.log(x))
    assert boxcox_loglik(x, lam) == pytest.approx(ref, rel=1e-9)


def test_loglik_stable_at_extreme_lambda():
    x = np.random.default_rng(7).lognormal(5, 2, 500)
    assert np.isfinite(boxcox_loglik(x, 5.0))
    assert np.isfinite(boxcox_loglik(x, -5.0))


def test_default_grid():
    g = default_grid()
    assert g.size == 1001
    assert g[0] == -5.0 and g[-1] == 5.0 and g[500] == 0.0
    assert g[501] == 0.01


def test_single_candidate_grid():
    res = select_lambda([1.0, 2.0, 9.0], "mle", grid=[1.0])
    assert res.lambda_star == 1.0
    assert res.objective_curve[0][0] == 1.0


def test_select_lambda_matches_brute_force_scan():
    x = np.random.default_rng(8).gamma(2.0, size=300)
    grid = np.linspace(-2, 2, 81)
    shifted = x + 1e-8
    for strategy in ("mle", "skew", "kurt"):
        res = select_lambda(x, strategy, grid=grid)
        if strategy == "mle":
            scores = [boxcox_loglik(shifted, g) for g in grid]
            best = grid[int(np.argmax(scores))]
        else:
            fn, tgt = (skewness, 0.0) if strategy == "skew" else (kurtosis, 1.0)
            scores = [abs(fn(boxcox_apply(shifted, g)) - tgt) for g in grid]
            best = grid[int(np.argmin(scores))]
        assert res.lambda_star == pytest.approx(best, abs=1e-12), strategy


def test_tie_break_prefers_first():
    # A duplicated grid value ties exactly with itself; the first entry must win.
    res = select_lambda([1.0, 2.0, 3.0], "skew", grid=[1.0, 1.0, 0.5])
    assert res.lambda_star == 1.0
    curve = [lam for lam, _ in res.objective_curve]
    assert curve == [1.0, 1.0, 0.5]


def test_mle_first_order_condition():
    x = np.random.default_rng(9).lognormal(0, 0.5, 1000) ** 2
    res = select_lambda(x, "mle")
    lams = np.array([c[0] for c in res.objective_curve])
    vals = np.array([c[1] for c in res.objective_curve])
    i = int(np.where(lams == res.lambda_star)[0][0])
    assert 0 < i < lams.size - 1
    assert vals[i] - vals[i - 1] >= 0 and vals[i + 1] - vals[i] <= 0


def test_select_lambda_deterministic():
    x = np.random.default_rng(10).exponential(size=200)
    assert select_lambda(x, "kurt") == select_lambda(x, "kurt")


def test_skew_target_one_objective():
    x = np.random.default_rng(11).exponential(size=200)
    res = select_lambda(x, "skew", grid=[0.25, 0.5], target=1.0)
    for lam, score in res.objective_curve:
        assert score == pytest.approx(abs(skewness(boxcox_apply(x + 1e-8, lam)) - 1.0), rel=1e-9)


def test_select_lambda_degenerate():
    with pytest.raises(DegenerateTransformError, match="degenerate"):
        select_lambda([2.0, 2.0, 2.0], "skew")
    with pytest.raises(DegenerateTransformError):
        select_lambda([2.0, 2.0, 2.0], "mle")


def test_select_lambda_bad_strategy():
    with pytest.raises(ConfigError):
        select_lambda([1.0, 2.0], "median")


def test_search_result_json_nulls():
    d = LambdaSearchResult(0.0, ((0.0, -np.inf), (1.0, 2.0)), "mle", None, 1e-8).to_dict()
    assert d["objective_curve"][0][1] is None


def test_alt_transform_examples():
    z = alt_transform([1, 2, 3], TransformSpec.alt("zscore"))
    assert np.allclose(z, [-math.sqrt(1.5), 0, math.sqrt(1.5)])
    assert alt_transform([math.e - 1e-8], TransformSpec.alt("log"))[0] == pytest.approx(1.0)
    assert alt_transform([4 - 1e-8], TransformSpec.alt("power"))[0] == pytest.approx(2.0)
    x = np.array([0.1, 3.7])
    assert np.array_equal(alt_transform(x, TransformSpec.alt("identity")), x)


def test_alt_transform_errors():
    with pytest.raises(DegenerateTransformError):
        alt_transform([1.0, 1.0], TransformSpec.alt("zscore"))
    with pytest.raises(DataError):
        alt_transform([701.0], TransformSpec.alt("exp"))
    with pytest.raises(DataError):
        alt_transform([-1.0], TransformSpec.alt("log"))


def test_transform_spec_roundtrip():
    spec = TransformSpec.boxcox(0.37)
    assert TransformSpec.from_dict(spec.to_dict()) == spec
    assert spec.to_dict()["lambda"] == 0.37


def test_boxcox_transformer_estimator():
    x = np.random.default_rng(12).lognormal(size=(300, 1))
    est = BoxCoxTransformer()
    out = est.fit_transform(x)
    assert out.shape == x.shape
    assert abs(est.lambda_) < 0.3
    assert np.allclose(est.inverse_transform(out), x, rtol=1e-9)
    assert est.get_params()["strategy"] == "mle"
