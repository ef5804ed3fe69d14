import math

import numpy as np
import pytest
from scipy import interpolate, stats

from l1profile.errors import RankDeficient, ValidationError
from l1profile.profiles import ProfileSet
from l1profile.synthetic import (BSplineBasis, Contamination, SyntheticSpec, bspline_eval,
                                 calibrate_spec_from_phase1, exp_corr_paths, gaussian_to_t3,
                                 generate, l1_regression, profile_rng, pseudo_vdp_spec,
                                 sample_error_path)

BASIS = BSplineBasis()


# ---------------------------------------------------------------- basis

def test_basis_shape_and_partition_of_unity():
    x = np.linspace(0, 0.626, 2001)
    B = bspline_eval(BASIS, x)
    assert B.shape == (2001, 8) and BASIS.n_basis == 8
    assert np.all(B >= 0)
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-10)


def test_basis_endpoints_and_support():
    np.testing.assert_array_equal(bspline_eval(BASIS, 0.0), np.eye(8)[0])
    np.testing.assert_array_equal(bspline_eval(BASIS, 0.626), np.eye(8)[-1])
    assert np.count_nonzero(bspline_eval(BASIS, 0.31)) <= 3
    rng = np.random.default_rng(0)
    for x in rng.uniform(0, 0.626, 200):
        assert np.count_nonzero(bspline_eval(BASIS, x)) <= 3


def test_basis_matches_scipy():
    x = np.linspace(0, 0.626, 777)[:-1]  # scipy treats the right end as outside
    ref = interpolate.BSpline.design_matrix(x, BASIS.knots, 2).toarray()
    np.testing.assert_allclose(bspline_eval(BASIS, x), ref, atol=1e-13)


def test_basis_rejects_out_of_domain():
    with pytest.raises(ValidationError):
        bspline_eval(BASIS, [0.1, 0.7])


# ---------------------------------------------------------------- error processes

def _autocorr(paths, lag):
    a, b = paths[:, :-lag], paths[:, lag:]
    return float(np.mean(a * b) / np.sqrt(np.mean(a * a) * np.mean(b * b)))


def test_gaussian_lag1_autocorrelation():
    x = np.arange(100_000) * 0.002
    e = exp_corr_paths(x, 1.3, 8.0, np.random.default_rng(1))
    r = np.corrcoef(e[:-1], e[1:])[0, 1]
    assert r == pytest.approx(math.exp(-8 * 0.002), abs=0.01)


def test_gaussian_marginal_variance():
    x = np.arange(314) * 0.002
    e = exp_corr_paths(x, 0.7, 8.0, np.random.default_rng(2), n_paths=100_000)
    assert np.var(e[:, 150]) == pytest.approx(0.49, rel=0.03)


def test_t3_marginal_median_and_variance():
    spec = pseudo_vdp_spec("t3_scaled").with_(locations=np.arange(2000.0), sigma=2.0)
    e = sample_error_path(spec, np.random.default_rng(3), n_paths=500).ravel()
    assert abs(np.median(e)) <= 0.01 * 2.0
    # heavy tails make the variance converge slowly; check the quartiles instead
    q = np.quantile(e, [0.25, 0.75])
    np.testing.assert_allclose(q, stats.t.ppf([0.25, 0.75], 3) * 2 / math.sqrt(3), rtol=0.02)


def test_copula_map_is_odd_and_increasing():
    assert np.all(np.isfinite(gaussian_to_t3([-1e3, -40.0, 40.0, 1e3], 1.0)))
    half = np.linspace(0, 37, 2001)
    z = np.concatenate([-half[::-1], half[1:]])
    t = gaussian_to_t3(z, 1.0)
    assert np.all(np.diff(t) > 0)
    np.testing.assert_array_equal(t, -t[::-1])


def test_error_streams_are_keyed():
    spec = pseudo_vdp_spec()
    a = sample_error_path(spec, profile_rng(0, 5, 1))
    b = sample_error_path(spec, profile_rng(0, 5, 1))
    c = sample_error_path(spec, profile_rng(0, 5, 2))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------- generate

def test_generate_is_deterministic():
    spec = pseudo_vdp_spec("t3_scaled", seed=11)
    a, b = generate(spec, 5), generate(spec, 5)
    for p, q in zip(a, b):
        assert p.id == q.id
        np.testing.assert_array_equal(p.y, q.y)
    c = generate(spec.with_(seed=12), 5)
    assert not np.array_equal(a[0].y, c[0].y)


def test_noise_free_profiles_equal_mean_curve():
    spec = pseudo_vdp_spec().with_(sigma=0.0, sigma_delta=0.0)
    for p in generate(spec, 3):
        np.testing.assert_array_equal(p.y, spec.mean_curve())


@pytest.mark.parametrize("kind", ["gaussian", "t3_scaled"])
def test_twins_differ_by_contamination(kind):
    base = pseudo_vdp_spec(kind, seed=4)
    clean = generate(base, 4, stream=3)
    x = base.locations
    sine = generate(base.with_(contamination=Contamination.sine(0.75)), 4, stream=3)
    spike = generate(base.with_(contamination=Contamination.spike(0.04)), 4, stream=3)
    for c, s, k in zip(clean, sine, spike):
        np.testing.assert_allclose(s.y - c.y, 0.75 * np.sin(10 * np.pi * x), atol=1e-12)
        d = k.y - c.y
        assert d.max() == pytest.approx(0.04 / (0.005 * math.sqrt(2 * math.pi)), rel=1e-9)
        assert x[np.argmax(d)] == pytest.approx(0.3)
    assert max(abs(spike[0].y - clean[0].y)) == pytest.approx(3.19, abs=0.005)


def test_localized_spike_reading():
    bump = Contamination.spike(0.04, spread=0.005)
    x = np.array([0.3, 0.31, 0.5])
    np.testing.assert_allclose(bump(x), 0.04 * stats.norm.pdf((x - 0.3) / 0.005) / 0.005)
    assert bump(0.5) < 1e-100


def test_generate_validation():
    with pytest.raises(ValidationError):
        generate(pseudo_vdp_spec(), 0)
    with pytest.raises(ValidationError):
        pseudo_vdp_spec().with_(alpha0_coeffs=(1.0, 2.0))
    with pytest.raises(ValidationError):
        Contamination("wobble")


def test_spec_config_round_trip():
    spec = pseudo_vdp_spec("t3_scaled", 9, Contamination.spike(0.03, 0.25, 0.01, 0.01))
    again = SyntheticSpec.from_config(["# " + ln for ln in spec.to_config()])
    assert again == spec
    np.testing.assert_array_equal(again.locations, spec.locations)
    odd = spec.with_(locations=np.array([0.0, 0.1, 0.35]))
    assert SyntheticSpec.from_config(odd.to_config()) == odd
    with pytest.raises(ValidationError):
        SyntheticSpec.from_config(["sigma=1"])


# ---------------------------------------------------------------- calibration

def test_calibration_recovers_noise_free_coefficients():
    alpha = (3.0, 1.0, -2.0, 0.5, 0.0, 4.0, -1.0, 2.5)
    spec = SyntheticSpec(np.arange(0, 0.6261, 0.002), alpha, 0.0, 0.0)
    got = calibrate_spec_from_phase1(generate(spec, 3))
    np.testing.assert_allclose(got.alpha0_coeffs, alpha, atol=1e-6)
    assert got.sigma == pytest.approx(0.0, abs=1e-6)


@pytest.mark.xfail(strict=True, reason=(
    "with correlation rate 8 over a domain of width 0.626 each error path is smooth "
    "enough for the per-profile spline fit to absorb most of it; see the design notes"))
def test_calibration_pooled_residual_sd():
    spec = pseudo_vdp_spec(seed=21).with_(sigma=1.0)
    got = calibrate_spec_from_phase1(generate(spec, 100))
    assert got.sigma == pytest.approx(1.0, rel=0.05)


def test_calibration_with_rough_paths_recovers_sigma():
    # a fast-decorrelating process is not absorbed by the spline
    spec = pseudo_vdp_spec(seed=22).with_(sigma=1.0, corr_rate=2000.0)
    got = calibrate_spec_from_phase1(generate(spec, 30))
    assert got.sigma == pytest.approx(1.0, rel=0.05)


def test_l1_regression_is_optimal():
    rng = np.random.default_rng(5)
    x = np.sort(rng.uniform(0, 0.626, 120))
    X = bspline_eval(BASIS, x)
    y = X @ rng.normal(0, 2, 8) + stats.t.rvs(2, size=120, random_state=rng)
    beta = l1_regression(X, y)
    f0 = np.abs(y - X @ beta).sum()
    steps = np.geomspace(1e-6, 1.0, 25)
    dirs = np.vstack([np.eye(8), -np.eye(8), rng.standard_normal((200, 8))])
    for d in dirs:
        d = d / np.linalg.norm(d)
        f = np.array([np.abs(y - X @ (beta + s * d)).sum() for s in steps])
        assert f.min() >= f0 - 1e-6


def test_rank_deficient_design():
    pset = generate(SyntheticSpec(np.linspace(0.0, 0.05, 20), (1,) * 8, 0.1, 0.1), 2)
    with pytest.raises(RankDeficient):
        calibrate_spec_from_phase1(pset)
    with pytest.raises(ValidationError):
        calibrate_spec_from_phase1(ProfileSet(()))
