import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from lambdatracer.exceptions import DataError
from lambdatracer.kde import (
    GaussianKDE,
    KdeEstimate,
    integration_grid,
    kde_eval,
    kde_fit,
    overlap,
    overlap_matrix,
    silverman_bandwidth,
)
from lambdatracer.loss_model import LossDataset, LossSample


def ds_from(spec):
    return LossDataset(tuple(LossSample(f"{c}{i}", c, v)
                             for c, vals in spec.items() for i, v in enumerate(vals)))


def test_single_point_peak():
    kde = kde_fit([0.0], bandwidth=1.0)
    assert kde_eval(kde, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_symmetric_pair():
    kde = kde_fit([-1.0, 1.0], bandwidth=0.5)
    assert kde_eval(kde, 0.3) == pytest.approx(kde_eval(kde, -0.3), rel=1e-15)


def test_scalar_and_array_eval():
    kde = kde_fit([1.0, 2.0, 4.0], bandwidth=0.7)
    arr = kde_eval(kde, [1.5, 3.0])
    assert isinstance(kde_eval(kde, 1.5), float)
    assert arr.shape == (2,)
    for x, got in zip([1.5, 3.0], arr):
        assert got == pytest.approx(oracles.kde_direct([1.0, 2.0, 4.0], 0.7, x), rel=1e-13)


def test_chunked_eval_matches_direct():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=3000)
    kde = kde_fit(pts, 0.2)
    xs = rng.normal(size=700)
    got = kde_eval(kde, xs)
    for x, g in zip(xs[:20], got[:20]):
        assert g == pytest.approx(oracles.kde_direct(pts.tolist(), 0.2, float(x)), rel=1e-12)


def test_silverman_matches_formula():
    x = np.array([1.0, 2.0, 3.0, 4.0, 10.0])
    sd = np.std(x, ddof=1)
    iqr = np.percentile(x, 75) - np.percentile(x, 25)
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 5 ** -0.2)


def test_silverman_zero_iqr_uses_std():
    x = np.array([1.0] * 9 + [5.0])
    assert silverman_bandwidth(x) == pytest.approx(0.9 * np.std(x, ddof=1) * 10 ** -0.2)


def test_zero_variance_falls_back_with_warning():
    with pytest.warns(RuntimeWarning, match="zero variance"):
        kde = kde_fit([3.0, 3.0, 3.0])
    assert kde.bandwidth == pytest.approx(3e-3)


def test_invalid_inputs():
    with pytest.raises(DataError):
        kde_fit([])
    with pytest.raises(DataError):
        kde_fit([1.0, np.nan])
    with pytest.raises(ValueError):
        kde_fit([1.0], bandwidth=0.0)
    with pytest.raises(ValueError):
        KdeEstimate(np.array([1.0]), -1.0)


def test_density_integrates_to_one():
    rng = np.random.default_rng(2)
    kde = kde_fit(rng.gamma(2.0, size=300))
    grid = integration_grid(kde, kde)
    vals = kde_eval(kde, grid)
    assert vals.min() >= 0
    assert abs(np.trapezoid(vals, grid) - 1.0) < 1e-3


def test_overlap_self_and_disjoint():
    rng = np.random.default_rng(3)
    a = kde_fit(rng.normal(size=200))
    assert 1 - 1e-3 <= overlap(a, a) <= 1.0
    far = kde_fit(rng.normal(1e3, 1.0, size=200))
    assert overlap(a, far) < 1e-6


def test_overlap_grid_points_validation():
    a = kde_fit([0.0, 1.0])
    with pytest.raises(ValueError):
        overlap(a, a, grid_points=8)


_samples = st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=30).filter(
    lambda v: np.std(v) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(_samples, _samples, st.floats(-100, 100, allow_nan=False))
def test_overlap_symmetry_and_shift(a, b, c):
    ka, kb = kde_fit(a), kde_fit(b)
    assert abs(overlap(ka, kb) - overlap(kb, ka)) <= 1e-12
    sa = KdeEstimate(np.asarray(a) + c, ka.bandwidth)
    sb = KdeEstimate(np.asarray(b) + c, kb.bandwidth)
    assert abs(overlap(sa, sb) - overlap(ka, kb)) <= 1e-9


def test_grid_refinement_converges():
    rng = np.random.default_rng(4)
    a = kde_fit(rng.normal(size=400))
    b = kde_fit(rng.normal(1.0, 1.5, size=400))
    assert abs(overlap(a, b, 4096) - overlap(a, b)) < 1e-3


def test_overlap_matrix_basic():
    m = overlap_matrix(ds_from({"a": [1.0, 2.0, 3.0]}))
    assert m.values.shape == (1, 1)
    assert m.values[0, 0] == pytest.approx(1.0, abs=1e-3)

    same = overlap_matrix(ds_from({"a": [1.0, 2.0, 3.5], "b": [1.0, 2.0, 3.5]}))
    assert same.values[0, 1] == pytest.approx(1.0, abs=1e-3)
    assert np.array_equal(same.values, same.values.T)


def test_overlap_matrix_threads_independent():
    rng = np.random.default_rng(5)
    ds = ds_from({c: rng.gamma(k + 1, size=50).tolist() for k, c in enumerate("abcd")})
    assert np.array_equal(overlap_matrix(ds).values, overlap_matrix(ds, threads=4).values)


def test_overlap_matrix_needs_two_samples():
    with pytest.raises(DataError, match="at least 2"):
        overlap_matrix(ds_from({"a": [1.0, 2.0], "b": [3.0]}))


def test_overlap_matrix_csv():
    text = overlap_matrix(ds_from({"a": [1.0, 2.0], "b": [1.5, 2.5]})).to_csv()
    lines = text.splitlines()
    assert lines[0] == "category,a,b"
    assert lines[1].startswith("a,1.0000,")


def test_gaussian_kde_estimator():
    est = GaussianKDE(bandwidth=0.5).fit(np.array([[0.0], [1.0]]))
    assert est.bandwidth_ == 0.5
    pdf = est.pdf([0.5])
    assert np.allclose(est.score_samples([0.5]), np.log(pdf))
    assert est.get_params() == {"bandwidth": 0.5}
    assert est.overlap(est) == pytest.approx(1.0, abs=1e-3)
