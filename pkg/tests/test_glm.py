import numpy as np
import pytest
from scipy.optimize import minimize

from mvstack.errors import DimensionMismatch, NullPath
from mvstack.glm import (PenaltySpec, binomial_deviance, cv_tune, fit_path,
                         fit_penalized_logistic, fit_unpenalized_logistic,
                         kkt_residual, lambda_path, mean_nll,
                         penalized_objective, predict_proba)
from mvstack.numerics import RngStream, sigmoid

from oracles import penalized_logistic_objective, projected_gradient_logistic


def make_instance(seed, n=50, p=8, beta=None):
    rng = RngStream(seed)
    X = rng.standard_normal(n * p).reshape(n, p)
    if beta is None:
        beta = np.zeros(p)
        beta[: min(3, p)] = [1.5, -1.0, 0.8][: min(3, p)]
    y = (rng.random(n) < sigmoid(X @ beta)).astype(float)
    if y.sum() in (0, n):  # keep both classes
        y[0] = 1 - y[0]
    return X, y


class TestPenalizedFit:
    def test_null_model_at_lambda_max(self):
        X, y = make_instance(7)
        for nonneg in (False, True):
            spec = PenaltySpec(alpha=1.0, nonnegative=nonneg)
            path = lambda_path(X, y, spec)
            fit = fit_penalized_logistic(
                X, y, PenaltySpec(lam=path.values[0], alpha=1.0, nonnegative=nonneg))
            assert np.count_nonzero(fit.coefficients) == 0
            ybar = y.mean()
            assert fit.intercept == pytest.approx(np.log(ybar / (1 - ybar)), abs=1e-6)

    def test_oracle_objective_and_kkt(self):
        X, y = make_instance(21)
        spec = PenaltySpec(lam=0.1, alpha=0.5, nonnegative=True)
        fit = fit_penalized_logistic(X, y, spec)
        b0, beta, _ = projected_gradient_logistic(X, y, 0.1, 0.5, True)
        f_cd = penalized_logistic_objective(X, y, fit.intercept, fit.coefficients,
                                            0.1, 0.5)
        f_pg = penalized_logistic_objective(X, y, b0, beta, 0.1, 0.5)
        assert abs(f_cd - f_pg) <= 1e-6 * max(1.0, abs(f_pg))
        assert kkt_residual(X, y, fit, spec) <= 1e-4

    def test_separation_flagged(self):
        y = np.array([0.0, 0, 0, 0, 0, 1, 1, 1, 1, 1] * 2)
        X = (0.01 * (2 * y - 1)).reshape(-1, 1)
        fit = fit_penalized_logistic(X, y, PenaltySpec(lam=0.0, alpha=1.0))
        assert not fit.converged
        assert fit.coefficients[0] > 100  # runaway trajectory was halted

    def test_nonnegative_exact(self):
        for seed in range(5):
            X, y = make_instance(seed, beta=np.array([-2.0, 1.0, 0, 0, 0, 0, 0, 0]))
            fit = fit_penalized_logistic(
                X, y, PenaltySpec(lam=0.05, alpha=0.5, nonnegative=True))
            assert fit.coefficients.min() >= 0.0

    def test_objective_monotone_per_sweep(self):
        X, y = make_instance(33, n=40, p=6)
        spec = PenaltySpec(lam=0.05, alpha=0.5, nonnegative=False)
        b0, beta = 0.0, np.zeros(6)
        values = []
        for _ in range(200):
            fit = fit_penalized_logistic(X, y, spec, max_sweeps=1,
                                         init=(b0, beta))
            b0, beta = fit.intercept, fit.coefficients
            values.append(penalized_objective(X, y, b0, beta, spec))
            if fit.converged:
                break
        v = np.asarray(values)
        assert np.all(np.diff(v) <= 1e-12 * np.maximum(1.0, np.abs(v[:-1])))

    def test_infinite_weight_excludes_column(self):
        X, y = make_instance(3)
        w = np.ones(8)
        w[0] = np.inf
        fit = fit_penalized_logistic(
            X, y, PenaltySpec(lam=0.01, alpha=0.5, feature_weights=w))
        assert fit.coefficients[0] == 0.0

    def test_dimension_mismatch(self):
        X, y = make_instance(1)
        with pytest.raises(DimensionMismatch):
            fit_penalized_logistic(X[:, :3], y[:-1], PenaltySpec(lam=0.1))

    def test_ridge_matches_smooth_optimizer(self):
        X, y = make_instance(11, n=60, p=5)
        spec = PenaltySpec(lam=0.2, alpha=0.0)
        fit = fit_penalized_logistic(X, y, spec)

        def obj(theta):
            return mean_nll(X, y, theta[0], theta[1:]) \
                + 0.2 / 2 * np.sum(theta[1:] ** 2)

        res = minimize(obj, np.zeros(6), method="BFGS",
                       options={"gtol": 1e-12, "maxiter": 5000})
        f_cd = obj(np.concatenate([[fit.intercept], fit.coefficients]))
        assert abs(f_cd - res.fun) <= 1e-6 * max(1.0, abs(res.fun))


class TestLambdaPath:
    def test_shape_and_ratio(self):
        X, y = make_instance(2)
        path = lambda_path(X, y, PenaltySpec(alpha=0.5))
        assert path.values.size == 100
        assert path.values[-1] / path.values[0] == pytest.approx(1e-4, rel=1e-12)
        assert np.all(np.diff(path.values) < 0)

    def test_null_path(self):
        rng = RngStream(5)
        y = (rng.random(40) < 0.5).astype(float)
        X = -(2 * y - 1).reshape(-1, 1) + 0.01 * rng.standard_normal(40).reshape(-1, 1)
        with pytest.raises(NullPath):
            lambda_path(X, y, PenaltySpec(alpha=1.0, nonnegative=True))

    def test_warm_equals_cold(self):
        X, y = make_instance(9)
        spec = PenaltySpec(alpha=0.5, nonnegative=True)
        path = lambda_path(X, y, spec)
        warm = fit_path(X, y, spec, path.values)
        for i in range(0, 100, 7):
            cold = fit_penalized_logistic(
                X, y, PenaltySpec(lam=path.values[i], alpha=0.5, nonnegative=True))
            np.testing.assert_allclose(cold.coefficients, warm[i].coefficients,
                                       atol=1e-6)

    def test_kkt_along_path(self):
        X, y = make_instance(13)
        for alpha in (0.0, 0.5, 1.0):
            for nonneg in (False, True):
                spec = PenaltySpec(alpha=alpha, nonnegative=nonneg)
                path = lambda_path(X, y, spec)
                for lam in path.values[::25]:
                    s = PenaltySpec(lam=lam, alpha=alpha, nonnegative=nonneg)
                    fit = fit_penalized_logistic(X, y, s)
                    assert kkt_residual(X, y, fit, s) <= 1e-4


class TestCvTune:
    def test_deterministic(self):
        X, y = make_instance(4, n=80)
        lam1, _ = cv_tune(X, y, alpha=0.5, K=5, rng=RngStream(3))
        lam2, _ = cv_tune(X, y, alpha=0.5, K=5, rng=RngStream(3))
        assert lam1 == lam2

    def test_pure_noise_near_null(self):
        hits = 0
        for seed in range(20):
            rng = RngStream(100 + seed)
            X = rng.standard_normal(200 * 6).reshape(200, 6)
            y = (rng.random(200) < 0.5).astype(float)
            try:
                _, fit = cv_tune(X, y, alpha=1.0, nonnegative=True, K=5,
                                 rng=rng.substream("cv"))
                active = np.count_nonzero(fit.coefficients)
            except NullPath:
                active = 0
            hits += active <= 1
        assert hits >= 18  # at-or-near null in >= 90% of seeds

    def test_strong_feature_selected(self):
        for seed in range(10):
            rng = RngStream(200 + seed)
            X = rng.standard_normal(500 * 4).reshape(500, 4)
            y = (rng.random(500) < sigmoid(10 * X[:, 0])).astype(float)
            _, fit = cv_tune(X, y, alpha=1.0, K=5, rng=rng.substream("cv"))
            assert fit.coefficients[0] != 0.0


class TestUnpenalized:
    def test_intercept_only(self):
        fit = fit_unpenalized_logistic(np.empty((4, 0)), np.array([1.0, 1, 1, 0]))
        assert fit.intercept == pytest.approx(np.log(3), abs=1e-6)

    def test_noise_coefficients_small(self):
        rng = RngStream(17)
        X = rng.standard_normal(1000 * 3).reshape(1000, 3)
        y = np.tile([0.0, 1.0], 500)
        fit = fit_unpenalized_logistic(X, y)
        assert np.max(np.abs(fit.coefficients)) < 0.5

    def test_separable_capped(self):
        y = np.array([0.0, 0, 0, 0, 1, 1, 1, 1] * 4)
        X = (0.01 * (2 * y - 1)).reshape(-1, 1)
        fit = fit_unpenalized_logistic(X, y)
        assert not fit.converged
        assert np.linalg.norm(fit.coefficients) <= 1e3 + 1e-9

    def test_nonnegative_variant(self):
        X, y = make_instance(19, beta=np.array([-3.0, 2.0, 0, 0, 0, 0, 0, 0]))
        fit = fit_unpenalized_logistic(X, y, nonnegative=True)
        assert fit.coefficients.min() >= 0.0

    def test_wide_rejected(self):
        X, y = make_instance(1, n=5, p=8)
        with pytest.raises(DimensionMismatch):
            fit_unpenalized_logistic(X, y)


class TestPredictAndDeviance:
    def test_null_prediction(self):
        fit = fit_unpenalized_logistic(np.empty((4, 0)), np.array([1.0, 0, 1, 0]))
        X = np.zeros((3, 0))
        np.testing.assert_allclose(predict_proba(fit, X), 0.5, atol=1e-9)

    def test_one_by_one(self):
        X, y = make_instance(2, n=30, p=1, beta=np.array([1.0]))
        fit = fit_penalized_logistic(X, y, PenaltySpec(lam=0.01, alpha=0.0))
        x_new = np.array([[0.3]])
        expect = sigmoid(fit.intercept + 0.3 * fit.coefficients[0])
        assert predict_proba(fit, x_new)[0] == pytest.approx(expect, abs=1e-12)

    def test_monotone_in_positive_feature(self):
        X, y = make_instance(23)
        fit = fit_penalized_logistic(
            X, y, PenaltySpec(lam=0.05, alpha=0.5, nonnegative=True))
        j = int(np.argmax(fit.coefficients))
        assert fit.coefficients[j] > 0
        row = X[:1].copy()
        bumped = row.copy()
        bumped[0, j] += 0.5
        assert predict_proba(fit, bumped)[0] > predict_proba(fit, row)[0]

    def test_deviance_hand_case(self):
        assert binomial_deviance([1, 0], [0.5, 0.5]) == pytest.approx(4 * np.log(2))

    def test_deviance_perfect(self):
        assert binomial_deviance([1.0, 0.0], [1.0, 0.0]) <= 1e-10

    def test_deviance_matches_mean_nll(self):
        X, y = make_instance(29, n=40, p=4)
        rng = RngStream(31)
        for _ in range(5):
            b0 = float(rng.standard_normal(1)[0])
            beta = rng.standard_normal(4)
            p_hat = sigmoid(b0 + X @ beta)
            expect = 2 * 40 * mean_nll(X, y, b0, beta)
            assert binomial_deviance(y, p_hat) == pytest.approx(expect, abs=1e-10)

    def test_shape_mismatch(self):
        fit = fit_unpenalized_logistic(np.zeros((4, 1)), np.array([1.0, 0, 1, 0]))
        with pytest.raises(DimensionMismatch):
            predict_proba(fit, np.zeros((2, 3)))
