import math

import numpy as np
import pytest

from oracles import naive_almon, normal_equations

from mflstm.alignment import LagSpec, frequency_align
from mflstm.errors import DomainError, NumericalError, ShapeError, SingularDesignError
from mflstm.midas import (
    NON_NORMALIZED,
    NORMALIZED,
    MidasFit,
    almon_weights,
    ar1_fit,
    midas_fit,
    predict,
    umidas_fit,
)
from mflstm.series import MixedFrequencyDataset, Series


def test_almon_examples():
    np.testing.assert_allclose(almon_weights((0, 0), 3), [1 / 3] * 3, rtol=0, atol=1e-15)
    np.testing.assert_allclose(almon_weights((math.log(2), 0), 2), [1 / 3, 2 / 3], rtol=1e-14)


def test_almon_steep_decay_peaks_first():
    w = almon_weights((0.7, -0.5), 12)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.argmax(w) == 0
    assert np.all(np.diff(w) < 0)


def test_almon_interior_peak():
    w = almon_weights((0.7, -0.1), 12)
    peak = int(np.argmax(w))
    assert 0 < peak < 11
    assert np.all(np.diff(w[: peak + 1]) > 0) and np.all(np.diff(w[peak:]) < 0)


def test_almon_guard_and_errors():
    w = almon_weights((300.0, 0.0), 10)  # naive exp overflows
    assert np.all(np.isfinite(w)) and w.sum() == pytest.approx(1.0)
    with pytest.raises(NumericalError):
        almon_weights((300.0, 0.0), 10, normalized=False)
    with pytest.raises(DomainError):
        almon_weights((0, 0), 0)


def test_almon_shift_invariance():
    a = almon_weights((0.3, -0.05), 9)
    b = naive_almon((0.3, -0.05), 9)
    np.testing.assert_allclose(a, b, rtol=1e-13)
    np.testing.assert_allclose(almon_weights((0.3, -0.05), 9, normalized=False),
                               naive_almon((0.3, -0.05), 9, normalized=False), rtol=1e-13)


def _eq4_dataset(T=200, theta=(0.7, -0.5), alpha=0.5, beta=1.0, J=12, noise=0.0, seed=0, K=1, scale=1.0):
    rs = np.random.default_rng(seed)
    covs, signal = [], np.full(T, alpha)
    for k in range(K):
        x = rs.standard_normal(3 * T) * scale
        w = almon_weights(theta, J)
        for t in range(1, T + 1):
            idx = 3 * t - np.arange(J)
            ok = idx >= 1
            signal[t - 1] += beta * np.sum(w[ok] * x[idx[ok] - 1] / scale)
        covs.append(Series(f"x{k + 1}", x, 3))
    y = signal + noise * rs.standard_normal(T)
    return MixedFrequencyDataset(Series("y", y), tuple(covs))


def test_midas_recovers_theta_noiseless():
    ds = _eq4_dataset()
    ad = frequency_align(ds, LagSpec(0, 11), 0)
    fit = midas_fit(ad, NORMALIZED, seed=1)
    np.testing.assert_allclose(fit.theta[0], [0.7, -0.5], atol=1e-3)
    assert fit.alpha == pytest.approx(0.5, abs=1e-6)
    assert fit.beta[0] == pytest.approx(1.0, abs=1e-6)
    # derived coefficients reproduce beta * w exactly
    np.testing.assert_allclose(fit.b_coefficients["x1"], fit.beta[0] * almon_weights(fit.theta[0], 12),
                               rtol=0, atol=1e-12)


def test_midas_profiling_identity():
    ds = _eq4_dataset(T=80, noise=0.0)
    ad = frequency_align(ds, LagSpec(0, 11), 0)
    fit = midas_fit(ad, NORMALIZED, grid=[(0.7, -0.5)], n_jitter=0)
    _, X, y = ad.rows()
    z = X @ almon_weights((0.7, -0.5), 12)
    ref = normal_equations(z[:, None], y)
    assert fit.beta[0] == pytest.approx(ref[1], abs=1e-8)
    assert fit.alpha == pytest.approx(ref[0], abs=1e-8)


def test_midas_rss_beats_truth_on_noisy_data():
    ds = _eq4_dataset(T=120, noise=0.5, theta=(0.7, -0.1), K=2, seed=3)
    ad = frequency_align(ds, LagSpec(0, 11), 0)
    fit = midas_fit(ad, NORMALIZED, seed=0)
    _, X, y = ad.rows()
    w = almon_weights((0.7, -0.1), 12)
    truth = 0.5 + X[:, :12] @ w + X[:, 12:] @ w
    assert fit.rss <= float(np.sum((y - truth) ** 2)) + 1e-9
    # restriction cannot improve on OLS
    assert umidas_fit(ad).rss <= fit.rss + 1e-9


def test_midas_scale_consistency():
    base = _eq4_dataset(T=150, theta=(0.7, -0.1))
    c = 4.0
    x = base.covariates[0]
    scaled = MixedFrequencyDataset(base.target, (Series("x1", x.values * c, 3),))
    a = midas_fit(frequency_align(base, LagSpec(0, 11), 0), NORMALIZED, seed=0)
    b = midas_fit(frequency_align(scaled, LagSpec(0, 11), 0), NORMALIZED, seed=0)
    np.testing.assert_allclose(b.theta, a.theta, atol=1e-6)
    assert b.beta[0] == pytest.approx(a.beta[0] / c, rel=1e-6)


def test_midas_non_normalized_and_ar_block():
    ds = _eq4_dataset(T=100, noise=0.2, seed=4)
    ad = frequency_align(ds, LagSpec(0, 5), 0, ar_lags=LagSpec(0, 0))
    fit = midas_fit(ad, NON_NORMALIZED, seed=0)
    assert fit.weighting == (NON_NORMALIZED,)
    assert fit.ar_coef.shape == (1,)
    _, X, _ = ad.rows()
    np.testing.assert_allclose(predict(fit, X), fit.alpha + X @ fit.coefficient_vector())
    with pytest.raises(ValueError):
        midas_fit(ad, "beta")


def test_midas_is_deterministic_per_seed():
    ds = _eq4_dataset(T=60, noise=1.0, seed=9)
    ad = frequency_align(ds, LagSpec(0, 5), 0)
    a = midas_fit(ad, NORMALIZED, seed=5)
    b = midas_fit(ad, NORMALIZED, seed=5)
    assert np.array_equal(a.theta, b.theta) and a.rss == b.rss


def test_midas_zero_beta_predicts_alpha():
    fit = MidasFit(alpha=2.5, beta=np.zeros(1), theta=np.zeros((1, 2)), weighting=(NORMALIZED,),
                   ids=("x",), columns=(("x", 0), ("x", 1)), ar_coef=np.zeros(0), rss=0.0,
                   sigma2=0.0, nobs=3)
    np.testing.assert_array_equal(fit.predict(np.random.default_rng(0).standard_normal((4, 2))), 2.5)
    with pytest.raises(ShapeError):
        fit.predict(np.ones((2, 3)))


def _quarterly(X, y):
    covs = tuple(Series(f"q{j}", X[:, j]) for j in range(X.shape[1]))
    return frequency_align(MixedFrequencyDataset(Series("y", y), covs), LagSpec(0, 0), 0)


def test_umidas_noiseless_recovery():
    rs = np.random.default_rng(0)
    X = rs.standard_normal((100, 10))
    b = rs.standard_normal(10)
    fit = umidas_fit(_quarterly(X, 0.3 + X @ b))
    np.testing.assert_allclose(fit.coef, b, atol=1e-8)
    assert fit.alpha == pytest.approx(0.3, abs=1e-8)


def test_umidas_matches_normal_equations():
    rs = np.random.default_rng(12)
    X = rs.standard_normal((12, 4))
    y = rs.standard_normal(12)
    fit = umidas_fit(_quarterly(X, y))
    ref = normal_equations(X, y)
    np.testing.assert_allclose(np.r_[fit.alpha, fit.coef], ref, atol=1e-8)
    resid = y - fit.predict(X)
    np.testing.assert_allclose(X.T @ resid, 0.0, atol=1e-8 * np.abs(X).sum())


def test_umidas_column_count_and_prediction():
    ds = _eq4_dataset(T=60, K=3, noise=1.0)
    ad = frequency_align(ds, LagSpec(0, 11), 0)
    fit = umidas_fit(ad)
    assert fit.coef.shape == (36,) and fit.n_params == 37
    row = ad.X[-1]
    assert predict(fit, row[None])[0] == pytest.approx(fit.alpha + sum(c * v for c, v in zip(fit.coef, row)))


def test_umidas_rank_deficiency_names_columns():
    rs = np.random.default_rng(1)
    X = rs.standard_normal((20, 3))
    X[:, 2] = X[:, 0] + X[:, 1]
    with pytest.raises(SingularDesignError) as info:
        umidas_fit(_quarterly(X, rs.standard_normal(20)))
    assert info.value.dependent_columns


def test_ar1_constant_series_and_fit():
    fit = ar1_fit(np.ones(10))
    np.testing.assert_allclose(fit.predict([[1.0], [1.0]]), 1.0)
    rs = np.random.default_rng(0)
    y = np.zeros(400)
    for t in range(1, 400):
        y[t] = 0.2 + 0.6 * y[t - 1] + 0.1 * rs.standard_normal()
    fit = ar1_fit(y)
    assert fit.slope == pytest.approx(0.6, abs=0.05)
    assert ar1_fit(y, h=2).h == 2
    with pytest.raises(ShapeError):
        ar1_fit([1.0, 2.0])
