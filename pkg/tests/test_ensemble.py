import math

import numpy as np
import pytest

from subridge import (
    Dataset,
    UndefinedOobError,
    asymptotic_risk,
    conditional_risk,
    corrected_gcv,
    ensemble_fit,
    gcv,
    isotropic_model,
    oob_error,
    predict,
    ridge_fit,
    sample_subsets,
    training_error,
)


def make_data(rng, n, p, beta0=None, sigma=1.0):
    X = rng.standard_normal((n, p))
    if beta0 is None:
        beta0 = np.zeros(p)
    y = X @ beta0 + sigma * rng.standard_normal(n)
    return Dataset(X, y)


class TestRidgeFit:
    def test_identity_interpolation(self):
        beta = ridge_fit(np.eye(2), np.array([1.0, 2.0]), 0.0)
        np.testing.assert_allclose(beta, [1.0, 2.0], atol=1e-12)

    def test_identity_half_penalty(self):
        beta = ridge_fit(np.eye(2), np.array([1.0, 2.0]), 0.5)
        np.testing.assert_allclose(beta, [0.5, 1.0], atol=1e-12)

    def test_huge_penalty_shrinks_to_zero(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        beta = ridge_fit(X, y, 1e9)
        assert np.linalg.norm(beta) <= 1e-6 * np.linalg.norm(X.T @ y / 10)

    def test_ridgeless_is_min_norm(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((5, 9))  # overparameterized
        y = rng.standard_normal(5)
        beta = ridge_fit(X, y, 0.0)
        np.testing.assert_allclose(beta, np.linalg.pinv(X) @ y, atol=1e-10)

    def test_normal_equations_residual(self):
        rng = np.random.default_rng(2)
        for k, p in ((20, 7), (7, 20)):
            X = rng.standard_normal((k, p))
            y = rng.standard_normal(k)
            lam = 0.3
            beta = ridge_fit(X, y, lam)
            resid = (X.T @ X / k + lam * np.eye(p)) @ beta - X.T @ y / k
            scale = np.linalg.norm(X.T @ y / k)
            assert np.linalg.norm(resid) <= 1e-8 * max(scale, 1.0)

    def test_continuity_in_penalty(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((30, 8))
        y = rng.standard_normal(30)
        b0 = ridge_fit(X, y, 0.5)
        b1 = ridge_fit(X, y, 0.5 + 1e-7)
        assert np.linalg.norm(b0 - b1) <= 1e-4

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ridge_fit(np.array([[np.nan]]), np.array([1.0]), 0.1)


class TestSampleSubsets:
    def test_full_size_is_everything(self):
        for idx in sample_subsets(5, 5, 3, seed=0):
            np.testing.assert_array_equal(idx, np.arange(5))

    def test_deterministic(self):
        a = sample_subsets(50, 10, 4, seed=7)
        b = sample_subsets(50, 10, 4, seed=7)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_singleton_frequency(self):
        hits = sum(s[0] == 0 for s in sample_subsets(2, 1, 10_000, seed=1))
        assert 0.48 <= hits / 10_000 <= 0.52

    def test_prefix_stable_in_member_count(self):
        # Growing the ensemble keeps earlier members' subsets unchanged.
        small = sample_subsets(30, 5, 3, seed=9)
        big = sample_subsets(30, 5, 6, seed=9)
        for x, y in zip(small, big):
            np.testing.assert_array_equal(x, y)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            sample_subsets(5, 6, 1, seed=0)


class TestEnsembleFit:
    def test_average_matches_member_recompute(self):
        rng = np.random.default_rng(4)
        data = make_data(rng, 40, 10)
        fit = ensemble_fit(data, 20, 8, 0.3, seed=11)
        recomputed = np.mean(
            [ridge_fit(data.X[m.indices], data.y[m.indices], 0.3)
             for m in fit.members],
            axis=0,
        )
        np.testing.assert_allclose(fit.coef, recomputed, atol=1e-12)

    def test_ridgeless_trace_is_k_when_overparameterized(self):
        rng = np.random.default_rng(5)
        data = make_data(rng, 30, 50)
        fit = ensemble_fit(data, 12, 4, 0.0, seed=2)
        for m in fit.members:
            assert m.trace_contribution == pytest.approx(12)

    def test_trace_bounds(self):
        rng = np.random.default_rng(6)
        data = make_data(rng, 30, 8)
        fit = ensemble_fit(data, 15, 5, 0.2, seed=3)
        for m in fit.members:
            assert 0.0 <= m.trace_contribution <= 8.0

    def test_null_fit(self):
        rng = np.random.default_rng(7)
        data = make_data(rng, 10, 3)
        fit = ensemble_fit(data, 0, 4, 0.1, seed=0)
        assert fit.is_null and fit.union_indices.size == 0
        np.testing.assert_array_equal(fit.coef, np.zeros(3))
        assert training_error(fit, data) == pytest.approx(np.mean(data.y**2))
        assert oob_error(fit, data) == pytest.approx(np.mean(data.y**2))
        report = gcv(fit, data)
        assert report.denominator == 1.0
        assert report.value == pytest.approx(np.mean(data.y**2))


class TestErrors:
    def test_interpolating_member_train_error_zero(self):
        rng = np.random.default_rng(8)
        data = make_data(rng, 20, 30)
        fit = ensemble_fit(data, 10, 1, 0.0, seed=4)
        assert training_error(fit, data) == pytest.approx(0.0, abs=1e-16)

    def test_oob_requires_uncovered_rows(self):
        rng = np.random.default_rng(9)
        data = make_data(rng, 12, 4)
        fit = ensemble_fit(data, 12, 1, 0.1, seed=5)
        with pytest.raises(UndefinedOobError):
            oob_error(fit, data)

    def test_decomposition_identity(self):
        # Full-data MSE of the average equals the member/pair combination.
        rng = np.random.default_rng(10)
        data = make_data(rng, 25, 6)
        fit = ensemble_fit(data, 10, 5, 0.2, seed=6)
        resids = [data.y - data.X @ m.coef for m in fit.members]
        M = len(resids)
        total = 0.0
        for a in range(M):
            for b in range(M):
                if a == b:
                    total += np.mean(resids[a] ** 2)
                else:
                    pair = np.mean(((resids[a] + resids[b]) / 2) ** 2)
                    single = (np.mean(resids[a] ** 2) + np.mean(resids[b] ** 2)) / 2
                    total += 2.0 * pair - single
        direct = np.mean((data.y - data.X @ fit.coef) ** 2)
        assert direct == pytest.approx(total / M**2, abs=1e-10)


class TestGcv:
    def test_dense_oracle_single_full_fit(self):
        rng = np.random.default_rng(11)
        n, p = 25, 10
        data = make_data(rng, n, p)
        lam = 0.4
        fit = ensemble_fit(data, n, 1, lam, seed=7)
        S = data.X @ np.linalg.inv(
            data.X.T @ data.X / n + lam * np.eye(p)
        ) @ data.X.T / n
        textbook = (
            np.mean(((np.eye(n) - S) @ data.y) ** 2)
            / (1.0 - np.trace(S) / n) ** 2
        )
        assert gcv(fit, data).value == pytest.approx(textbook, abs=1e-10)

    def test_huge_penalty_limit(self):
        rng = np.random.default_rng(12)
        data = make_data(rng, 30, 5)
        fit = ensemble_fit(data, 20, 3, 1e9, seed=8)
        idx = fit.union_indices
        assert gcv(fit, data).value == pytest.approx(
            np.mean(data.y[idx] ** 2), rel=1e-4
        )

    def test_degenerate_denominator_flagged(self):
        rng = np.random.default_rng(13)
        data = make_data(rng, 20, 30)
        fit = ensemble_fit(data, 20, 1, 0.0, seed=9)  # k = n, interpolation
        report = gcv(fit, data)
        assert report.degenerate and math.isinf(report.value)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(14)
        data = make_data(rng, 18, 6)
        perm = rng.permutation(18)
        shuffled = Dataset(data.X[perm], data.y[perm])
        a = gcv(ensemble_fit(data, 18, 1, 0.3, seed=0), data).value
        b = gcv(ensemble_fit(shuffled, 18, 1, 0.3, seed=1), shuffled).value
        assert a == pytest.approx(b, rel=1e-12)


class TestPredictAndRisk:
    def test_predict_matches_member_average(self):
        rng = np.random.default_rng(15)
        data = make_data(rng, 30, 7)
        fit = ensemble_fit(data, 15, 4, 0.2, seed=10)
        X_new = rng.standard_normal((8, 7))
        member_avg = np.mean([X_new @ m.coef for m in fit.members], axis=0)
        np.testing.assert_allclose(predict(fit, X_new), member_avg, atol=1e-12)

    def test_zero_input(self):
        rng = np.random.default_rng(16)
        data = make_data(rng, 10, 3)
        fit = ensemble_fit(data, 5, 2, 0.1, seed=0)
        np.testing.assert_array_equal(predict(fit, np.zeros((4, 3))), np.zeros(4))

    def test_conditional_risk_of_null_fit(self):
        rng = np.random.default_rng(17)
        p, n_test = 20, 40_000
        beta0 = np.full(p, 1.0 / math.sqrt(p))
        test = make_data(rng, n_test, p, beta0=beta0, sigma=1.0)
        fit = ensemble_fit(make_data(rng, 10, p), 0, 1, 0.0, seed=0)
        # Null risk = sigma^2 + rho^2 = 2 under the isotropic model.
        assert conditional_risk(fit, test) == pytest.approx(2.0, abs=0.05)


class TestCorrectedGcv:
    def test_monte_carlo_recovers_two_member_risk(self):
        # Isotropic phi = 0.5, phis = 2: plain two-member ridgeless GCV
        # overshoots the risk, the corrected statistic does not.
        p, n, k, reps = 200, 400, 100, 20
        model = isotropic_model(1.0, 1.0)
        r2 = asymptotic_risk(0.0, 0.5, 2.0, model, M=2).risk
        beta0 = np.zeros(p)
        beta0[0] = 1.0
        corrected, plain = [], []
        for rep in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence((21, rep)))
            X = rng.standard_normal((n, p))
            data = Dataset(X, X @ beta0 + rng.standard_normal(n))
            seed = int(rng.integers(2**31))
            fit2 = ensemble_fit(data, k, 2, 0.0, seed)
            fit1 = ensemble_fit(data, k, 1, 0.0, seed)
            result = corrected_gcv(fit2, data, fit1, fit2)
            assert not result.fallback
            corrected.append(result.value)
            plain.append(result.plain_gcv)
        mean_corr = np.mean(corrected)
        se = np.std(corrected, ddof=1) / math.sqrt(reps)
        assert abs(mean_corr - r2) <= 3.0 * se + 0.05 * r2
        assert np.mean(plain) - r2 > 10.0 * se  # plain GCV is biased upward

    def test_requires_multiple_members(self):
        rng = np.random.default_rng(22)
        data = make_data(rng, 30, 10)
        fit1 = ensemble_fit(data, 10, 1, 0.0, seed=0)
        with pytest.raises(ValueError):
            corrected_gcv(fit1, data, fit1, fit1)

    def test_fallback_when_oob_missing(self):
        rng = np.random.default_rng(23)
        data = make_data(rng, 16, 5)
        full = ensemble_fit(data, 16, 2, 0.2, seed=0)
        result = corrected_gcv(full, data, full, full)
        assert result.fallback
        assert result.value == pytest.approx(result.plain_gcv)
