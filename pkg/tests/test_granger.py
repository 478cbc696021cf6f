import math
from unittest import mock

import numpy as np
import pytest

from eegconn.connectivity import (
    BicLag,
    FixedLag,
    VarFit,
    f_sf,
    fit_var_pair,
    granger_matrix,
    select_lag,
)
from eegconn.errors import DataError, NumericError
from eegconn.recording import Recording


def make_rec(data, subject="g0"):
    data = np.asarray(data, dtype=float)
    return Recording(
        subject_id=subject,
        channel_labels=[f"ch{i}" for i in range(data.shape[0])],
        sample_rate_hz=128.0,
        data=data,
    )


def coupled_pair(rng, T=1024, coupling=0.8, self_coeff=0.5):
    """driver x autonomous AR(1); target y[t] = coupling*x[t-1] + self*y[t-1] + e."""
    x = np.zeros(T)
    y = np.zeros(T)
    ex = rng.normal(size=T)
    ey = rng.normal(size=T)
    for t in range(1, T):
        x[t] = self_coeff * x[t - 1] + ex[t]
        y[t] = coupling * x[t - 1] + self_coeff * y[t - 1] + ey[t]
    return x, y


class TestFitVarPair:
    def test_deterministic_predictability(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=512)
        target = np.roll(x, 1)  # target[t] == driver[t-1] exactly
        target[0] = 0.0
        fit = fit_var_pair(target, x, lag=1)
        assert fit.rss_unrestricted == pytest.approx(0.0, abs=1e-18)
        assert fit.p_value < 1e-10

    def test_white_noise_calibration_quick(self):
        rng = np.random.default_rng(1)
        hits = 0
        trials = 300
        for _ in range(trials):
            fit = fit_var_pair(rng.normal(size=1024), rng.normal(size=1024), lag=1)
            hits += fit.p_value < 0.05
        assert 0.02 <= hits / trials <= 0.09

    def test_power_on_real_coupling(self):
        rng = np.random.default_rng(2)
        hits = 0
        trials = 100
        for _ in range(trials):
            x, y = coupled_pair(rng)
            hits += fit_var_pair(y, x, lag=1).p_value < 0.05
        assert hits >= 99

    def test_f_statistic_and_dof(self):
        rng = np.random.default_rng(3)
        T, lag = 200, 3
        fit = fit_var_pair(rng.normal(size=T), rng.normal(size=T), lag)
        assert fit.n_obs == T - lag
        assert fit.rss_unrestricted <= fit.rss_restricted + 1e-9
        assert fit.f_statistic >= 0.0
        want_f = ((fit.rss_restricted - fit.rss_unrestricted) / lag) / (
            fit.rss_unrestricted / (fit.n_obs - 2 * lag - 1)
        )
        assert fit.f_statistic == pytest.approx(want_f, rel=1e-12)

    def test_p_value_matches_scipy(self):
        from scipy.stats import f as f_dist

        for f_stat, d1, d2 in [(0.5, 1, 100), (3.2, 4, 50), (10.0, 2, 997)]:
            assert f_sf(f_stat, d1, d2) == pytest.approx(
                float(f_dist.sf(f_stat, d1, d2)), rel=1e-10
            )

    def test_constant_inputs_singular(self):
        const = np.ones(100)
        wiggle = np.arange(100.0)
        with pytest.raises(NumericError, match="singular"):
            fit_var_pair(const, wiggle, lag=1)

    def test_too_short(self):
        with pytest.raises(DataError, match="too short"):
            fit_var_pair(np.arange(7.0), np.arange(7.0), lag=2)


class TestSelectLag:
    def test_max_lag_one(self):
        rng = np.random.default_rng(4)
        assert select_lag(rng.normal(size=64), rng.normal(size=64), 1) == 1

    def test_white_noise_total(self):
        rng = np.random.default_rng(5)
        lag = select_lag(rng.normal(size=256), rng.normal(size=256), 8)
        assert 1 <= lag <= 8

    def test_ar1_coupling_prefers_lag_one(self):
        rng = np.random.default_rng(6)
        wins = 0
        trials = 200
        for _ in range(trials):
            x, y = coupled_pair(rng, T=512)
            wins += select_lag(y, x, 8) == 1
        assert wins > trials / 2


class TestGrangerMatrix:
    def test_planted_edge_direction(self):
        rng = np.random.default_rng(7)
        hits_fwd = hits_rev = 0
        trials = 60
        for _ in range(trials):
            x, y = coupled_pair(rng)
            mat = granger_matrix(make_rec(np.vstack([x, y])), lag_policy=FixedLag(1))
            hits_fwd += mat.values[1, 0] == 1.0
            hits_rev += mat.values[0, 1] == 1.0
        assert hits_fwd >= 0.95 * trials
        assert hits_rev <= 0.15 * trials

    def test_null_density_near_alpha(self):
        rng = np.random.default_rng(8)
        ones = total = 0
        for _ in range(6):
            data = rng.normal(size=(16, 256))
            mat = granger_matrix(make_rec(data), alpha=0.05, lag_policy=FixedLag(1))
            off = ~np.eye(16, dtype=bool)
            ones += int(mat.values[off].sum())
            total += off.sum()
        assert 0.02 <= ones / total <= 0.09

    def test_strict_inequality_at_alpha(self):
        rec = make_rec(np.random.default_rng(9).normal(size=(2, 64)))
        fake = VarFit(lag_order=1, rss_restricted=1.0, rss_unrestricted=0.9,
                      n_obs=63, f_statistic=1.0, p_value=0.05)
        with mock.patch("eegconn.connectivity.fit_var_pair", return_value=fake):
            mat = granger_matrix(rec, alpha=0.05, lag_policy=FixedLag(1))
        assert np.array_equal(mat.values, np.zeros((2, 2)))
        fake.p_value = 0.049999
        with mock.patch("eegconn.connectivity.fit_var_pair", return_value=fake):
            mat = granger_matrix(rec, alpha=0.05, lag_policy=FixedLag(1))
        off = ~np.eye(2, dtype=bool)
        assert np.array_equal(mat.values[off], np.ones(2))

    def test_diagonal_zero_and_metadata(self):
        rng = np.random.default_rng(10)
        mat = granger_matrix(make_rec(rng.normal(size=(3, 128))),
                             alpha=0.05, lag_policy=FixedLag(1))
        assert np.array_equal(np.diag(mat.values), np.zeros(3))
        assert mat.directed
        assert mat.alpha == 0.05
        assert mat.lag_policy == "fixed(1)"
        assert set(np.unique(mat.values)) <= {0.0, 1.0}

    def test_bic_policy_smoke(self):
        rng = np.random.default_rng(11)
        mat = granger_matrix(make_rec(rng.normal(size=(3, 200))),
                             lag_policy=BicLag(max_lag=3))
        assert mat.lag_policy == "bic(3)"

    def test_error_names_channel_pair(self):
        data = np.vstack([np.ones(100), np.random.default_rng(12).normal(size=100)])
        with pytest.raises((DataError, NumericError), match="ch"):
            granger_matrix(make_rec(data), lag_policy=FixedLag(1))

    def test_permutation_consistency(self):
        rng = np.random.default_rng(13)
        x, y = coupled_pair(rng, T=512)
        z = rng.normal(size=512)
        data = np.vstack([x, y, z])
        perm = np.array([2, 0, 1])
        base = granger_matrix(make_rec(data), lag_policy=FixedLag(1)).values
        permuted = granger_matrix(make_rec(data[perm]), lag_policy=FixedLag(1)).values
        assert np.array_equal(base[np.ix_(perm, perm)], permuted)

    def test_asymmetry(self):
        rng = np.random.default_rng(14)
        x, y = coupled_pair(rng)
        mat = granger_matrix(make_rec(np.vstack([x, y])), lag_policy=FixedLag(1))
        assert not np.array_equal(mat.values, mat.values.T)
