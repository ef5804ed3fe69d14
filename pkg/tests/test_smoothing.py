import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from l1profile.errors import EmptyWindow, OutOfDomain, ValidationError
from l1profile.kernels import Kernel
from l1profile.smoothing import (SQRT2, CurveEstimate, PooledData, evaluate_curve, jackknife,
                                 jackknife_location, lad_curve, scale_curve, weighted_median)

K = Kernel()


def l1_objective(y, w, theta):
    return float(np.sum(w * np.abs(y - theta)))


def brute_lower_argmin(y, w):
    """Smallest data value attaining the minimum of the L1 objective.

    The objective is convex and piecewise linear with kinks at the data, so
    scanning the data values finds the whole minimizing set.
    """
    f = np.array([l1_objective(y, w, t) for t in y])
    tol = 1e-12 * max(1.0, f.min())
    return float(np.min(y[f <= f.min() + tol]))


def test_weighted_median_examples():
    assert weighted_median([5.0], [1.0]) == 5.0
    assert weighted_median([1, 2, 3], [1, 1, 1]) == 2.0
    assert weighted_median([3, 1, 2, 4], [1, 1, 1, 1]) == 2.0  # lower median
    assert weighted_median([0, 0, 10, 10, 10], [3, 3, 1, 1, 1]) == 0.0


def test_weighted_median_errors():
    with pytest.raises(EmptyWindow):
        weighted_median([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(EmptyWindow):
        weighted_median([], [])
    with pytest.raises(ValueError):
        weighted_median([1.0, 2.0], [1.0, -0.5])
    with pytest.raises(ValueError):
        weighted_median([1.0, 2.0], [1.0])


def test_weighted_median_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(1, 50))
        y = rng.standard_normal(n) * 3
        w = rng.uniform(0, 1, n) * (rng.uniform(size=n) > 0.2)
        if w.sum() == 0:
            w[0] = 1.0
        assert weighted_median(y, w) == brute_lower_argmin(y, w)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(0, 10)), min_size=1, max_size=40),
       st.floats(-1, 1))
def test_weighted_median_optimality(pairs, step):
    y = np.array([p[0] for p in pairs])
    w = np.array([p[1] for p in pairs])
    if not w.sum() > 0:
        return
    theta = weighted_median(y, w)
    f0 = l1_objective(y, w, theta)
    for t in theta + step * np.linspace(-1, 1, 21):
        assert f0 <= l1_objective(y, w, t) + 1e-9 * max(1.0, f0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=30), st.integers(0, 2**31 - 1),
       st.floats(-1e6, 1e6))
def test_weighted_median_robust_to_minority_contamination(vals, seed, junk):
    rng = np.random.default_rng(seed)
    y = np.array(vals)
    w = rng.uniform(0.1, 1.0, len(y))
    # replace a set of points holding < half the weight with arbitrary values
    order = rng.permutation(len(y))
    bad, acc = [], 0.0
    for i in order:
        if acc + w[i] < 0.45 * w.sum():
            bad.append(i)
            acc += w[i]
    keep = np.setdiff1d(np.arange(len(y)), bad)
    z = y.copy()
    z[bad] = junk + rng.standard_normal(len(bad))
    m = weighted_median(z, w)
    assert y[keep].min() <= m <= y[keep].max()


def _pooled(x, y):
    return PooledData(np.asarray(x, float), np.asarray(y, float))


def test_lad_curve_constant_data():
    x = np.linspace(0, 1, 50)
    data = _pooled(x, np.full(50, 3.5))
    for b in (0.05, 0.3):
        c = lad_curve(data, x, K, b)
        assert c.kind == "mu_raw"
        np.testing.assert_array_equal(c.values, 3.5)


def test_lad_curve_single_point_window():
    data = _pooled([0.0, 0.5, 1.0], [7.0, -2.0, 4.0])
    c = lad_curve(data, [0.0, 0.5, 1.0], K, 0.2)
    np.testing.assert_array_equal(c.values, [7.0, -2.0, 4.0])


def test_lad_curve_empty_window_names_location():
    data = _pooled([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(EmptyWindow) as info:
        lad_curve(data, [0.0, 0.5, 1.0], K, 0.1)
    assert info.value.location == 0.5


def test_lad_curve_consistency_improves_with_n():
    x = np.linspace(0, 1, 51)
    grid = x[5:-5]

    def sup_error(n, rng):
        data = _pooled(np.tile(x, n), rng.standard_normal(n * len(x)))
        return np.abs(lad_curve(data, grid, K, 0.1).values).max()

    rng = np.random.default_rng(7)
    err25 = np.mean([sup_error(25, rng) for _ in range(20)])
    err100 = np.mean([sup_error(100, rng) for _ in range(20)])
    assert err100 < err25


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-50, 50), st.floats(0.01, 100))
def test_lad_curve_equivariance(seed, c, scale):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 120)
    y = rng.standard_normal(120)
    grid = np.linspace(0, 1, 11)
    base = lad_curve(_pooled(x, y), grid, K, 0.3).values
    shifted = lad_curve(_pooled(x, y + c), grid, K, 0.3).values
    scaled = lad_curve(_pooled(x, y * scale), grid, K, 0.3).values
    np.testing.assert_allclose(shifted, base + c, rtol=0, atol=1e-12 * (1 + abs(c)))
    np.testing.assert_allclose(scaled, base * scale, rtol=1e-14)


def _mu(grid, values, b=0.1, kind="mu_jackknife"):
    return CurveEstimate(grid, values, b, kind)


def test_jackknife_examples():
    g = np.linspace(0, 1, 11)
    c = _mu(g, np.full(11, 2.0), 0.1, "mu_raw")
    c2 = _mu(g, np.full(11, 2.0), 0.1 * SQRT2, "mu_raw")
    out = jackknife(c, c2)
    assert out.kind == "mu_jackknife"
    np.testing.assert_array_equal(out.values, 2.0)
    q = jackknife(_mu(g, g ** 2, 0.1, "mu_raw"), _mu(g, 2 * g ** 2, 0.1 * SQRT2, "mu_raw"))
    np.testing.assert_array_equal(q.values, 0.0)


def test_jackknife_of_identical_curve():
    g = np.linspace(0, 1, 9)
    v = np.cos(5 * g)
    out = jackknife(_mu(g, v, 0.2, "mu_raw"), _mu(g, v, 0.2 * SQRT2, "mu_raw"))
    np.testing.assert_array_equal(out.values, v)


def test_jackknife_checks():
    g = np.linspace(0, 1, 5)
    with pytest.raises(ValidationError):
        jackknife(_mu(g, g, 0.1, "mu_raw"), _mu(g + 0.01, g, 0.1 * SQRT2, "mu_raw"))
    with pytest.raises(ValidationError):
        jackknife(_mu(g, g, 0.1, "mu_raw"), _mu(g, g, 0.15, "mu_raw"))
    with pytest.raises(ValidationError):
        jackknife(_mu(g, g, 0.1, "mu_raw"), CurveEstimate(g, g, 0.1 * SQRT2, "s_raw"))


def test_jackknife_floors_scale_curves():
    g = np.linspace(0, 1, 3)
    a = CurveEstimate(g, [1.0, 1.0, 1.0], 0.1, "s_raw", 0.5)
    b = CurveEstimate(g, [1.0, 3.0, 1.0], 0.1 * SQRT2, "s_raw", 0.5)
    out = jackknife(a, b)
    assert out.kind == "s_jackknife"
    np.testing.assert_array_equal(out.values, [1.0, 0.5, 1.0])


def test_jackknife_reduces_quadratic_bias():
    x = np.linspace(0, 1, 101)
    grid = x[10:-10]
    rng = np.random.default_rng(3)
    raw, jk = [], []
    for _ in range(20):
        data = _pooled(np.tile(x, 20), np.tile(x ** 2, 20) + 0.1 * rng.standard_normal(2020))
        raw.append(lad_curve(data, grid, K, 0.1).values - grid ** 2)
        jk.append(jackknife_location(data, grid, K, 0.1).values - grid ** 2)
    assert np.mean(np.abs(np.mean(jk, 0))) < np.mean(np.abs(np.mean(raw, 0)))


def test_scale_curve_zero_residuals_hits_floor():
    x = np.linspace(0, 1, 30)
    mu = _mu(x, np.sin(x))
    s = scale_curve(_pooled(x, np.sin(x)), mu, x, K, 0.2, s_floor=1e-6)
    assert s.kind == "s_raw"
    np.testing.assert_array_equal(s.values, 1e-6)


def test_scale_curve_alternating_residuals():
    x = np.linspace(0, 1, 400)
    resid = np.where(np.arange(400) % 2, 1.0, -1.0)
    mu = _mu(x, np.zeros(400))
    s = scale_curve(_pooled(x, resid), mu, x, K, 0.05)
    np.testing.assert_allclose(s.values, 1.0)


@pytest.mark.parametrize("residual_at", ["data", "target"])
def test_scale_curve_sign_flip_invariance(residual_at):
    rng = np.random.default_rng(5)
    x = np.sort(rng.uniform(0, 1, 300))
    grid = np.linspace(0, 1, 21)
    mu = _mu(grid, np.zeros(21))
    r = rng.standard_normal(300)
    flips = np.where(rng.uniform(size=300) < 0.5, -1.0, 1.0)
    a = scale_curve(_pooled(x, r), mu, grid, K, 0.2, residual_at=residual_at)
    b = scale_curve(_pooled(x, r * flips), mu, grid, K, 0.2, residual_at=residual_at)
    np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.xfail(strict=True, reason=(
    "profile-median centering removes part of each rate-8 error path, so the conditional "
    "MAD of centered profiles sits near 0.75-0.95, not 1; see the design notes"))
def test_scale_curve_recovers_unit_deviation(vdp_grid):
    from scipy import stats

    from l1profile.phase1 import fit
    from l1profile.synthetic import SyntheticSpec, generate
    # errors normalized so that median|e| = 1, i.e. s(x) = 1 in the model
    spec = SyntheticSpec(vdp_grid, (54, 66, 57, 50.5, 50.5, 57, 66, 54), 0.5,
                         1.0 / stats.norm.ppf(0.75), seed=0)
    model = fit(generate(spec, 100))
    inner = (vdp_grid > 0.0626) & (vdp_grid < 0.5634)
    s = evaluate_curve(model.s_tilde, vdp_grid[inner])
    assert np.max(np.abs(s - 1.0)) < 0.15


def test_evaluate_curve():
    c = _mu(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, 2.0]))
    assert evaluate_curve(c, 1.0) == 2.0
    assert evaluate_curve(c, 0.5) == 1.0
    np.testing.assert_array_equal(evaluate_curve(c, [0.0, 0.25, 2.0]), [0.0, 0.5, 2.0])
    with pytest.raises(OutOfDomain) as info:
        evaluate_curve(c, [-0.1, 0.5, 2.5])
    assert info.value.locations == [-0.1, 2.5]


def test_curve_estimate_invariants():
    g = np.array([0.0, 1.0])
    with pytest.raises(ValueError):
        CurveEstimate(np.array([1.0, 0.0]), g, 0.1, "mu_raw")
    with pytest.raises(ValueError):
        CurveEstimate(g, np.array([0.0, math.nan]), 0.1, "mu_raw")
    with pytest.raises(ValueError):
        CurveEstimate(g, g, 0.0, "mu_raw")
    with pytest.raises(ValueError):
        CurveEstimate(g, g, 0.1, "bogus")
