"""Zero-intercept least-squares and ridge solver.

The solver is checked against an independent oracle that forms the
normal equations explicitly and solves them with a generic linear solve.
The two routes share no code beyond numpy primitives, so agreement is
evidence the closed form is implemented correctly.
"""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stemsim.errors import (
    ConfigMismatch,
    EmptyDataset,
    InvalidInput,
    SingularSystem,
)
from stemsim.regression import (
    FitConfig,
    StemWeightRegressor,
    build_design,
    condition_report,
    fit,
    fit_weights,
)


def normal_equation_oracle(F, y, alpha=0.0):
    """Reference solution: w = (F'F + alpha I)^{-1} F'y, solved directly."""
    F = np.asarray(F, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = F.shape[1]
    return np.linalg.solve(F.T @ F + alpha * np.eye(k), F.T @ y)


def random_design(rng, n=50, k=7):
    F = rng.uniform(-2.0, 2.0, size=(n, k))
    y = rng.choice([-1.0, 1.0], size=n)
    return build_design(zip(F, y))


def relative_residual(F, y, w, alpha):
    k = F.shape[1]
    lhs = (F.T @ F + alpha * np.eye(k)) @ w
    rhs = F.T @ y
    return np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-30)


class TestKnownSolutions:
    def test_diagonal_ols(self):
        # rows (1,0) and (0,2) with targets 1,1 solve to w = (1, 0.5)
        design = build_design(
            [(np.array([1.0, 0.0]), 1), (np.array([0.0, 2.0]), 1)]
        )
        result = fit(design, FitConfig(method="ols"))
        np.testing.assert_allclose(result.weights, [1.0, 0.5], atol=1e-14)

    def test_identity_ridge_halves_targets(self):
        design = build_design(
            [(np.array([1.0, 0.0]), 1), (np.array([0.0, 1.0]), -1)]
        )
        result = fit(design, FitConfig(method="ridge", alpha=1.0))
        np.testing.assert_allclose(result.weights, [0.5, -0.5], atol=1e-14)

    def test_result_metadata(self):
        design = random_design(np.random.default_rng(0))
        result = fit(design, FitConfig(method="ridge", alpha=0.25))
        assert result.method == "ridge"
        assert result.alpha == 0.25
        assert result.n_rows == 50
        assert result.condition >= 1.0


class TestOracleEquivalence:
    @pytest.mark.parametrize("alpha", [0.0, 0.1, 1.0, 10.0])
    def test_matches_normal_equations(self, alpha):
        rng = np.random.default_rng(42)
        for _ in range(25):
            design = random_design(rng, k=rng.choice([5, 7]))
            method = "ols" if alpha == 0.0 else "ridge"
            result = fit(design, FitConfig(method=method, alpha=alpha))
            oracle = normal_equation_oracle(design.F, design.y, alpha)
            np.testing.assert_allclose(result.weights, oracle, rtol=1e-8)
            assert relative_residual(design.F, design.y, result.weights, alpha) <= 1e-9

    def test_ridge_alpha_zero_equals_ols(self):
        rng = np.random.default_rng(3)
        design = random_design(rng)
        w_ols = fit(design, FitConfig(method="ols")).weights
        w_ridge0 = fit(design, FitConfig(method="ridge", alpha=0.0)).weights
        np.testing.assert_array_equal(w_ols, w_ridge0)


class TestShrinkage:
    def test_norm_non_increasing_in_alpha(self):
        rng = np.random.default_rng(17)
        alphas = [0.0, 0.1, 1.0, 10.0, 100.0]
        for _ in range(10):
            design = random_design(rng)
            norms = [
                np.linalg.norm(
                    fit(design, FitConfig(method="ridge", alpha=a)).weights
                )
                for a in alphas
            ]
            for lo, hi in zip(norms[1:], norms[:-1]):
                assert lo <= hi + 1e-12


class TestDesignValidation:
    def test_empty_design(self):
        with pytest.raises(EmptyDataset):
            build_design([])

    def test_ragged_rows(self):
        with pytest.raises(ConfigMismatch):
            build_design([(np.zeros(5), 1), (np.zeros(7), -1)])

    def test_labels_must_be_signs(self):
        with pytest.raises(InvalidInput):
            build_design([(np.zeros(3), 0)])
        with pytest.raises(InvalidInput):
            build_design([(np.zeros(3), 0.5)])

    def test_condition_report_identity(self):
        design = build_design([(np.eye(3)[i], 1) for i in range(3)])
        assert condition_report(design) == 1.0

    def test_condition_report_scales_squared(self):
        # singular values 10 and 1 give a normal-equation condition of 100
        design = build_design(
            [(np.array([10.0, 0.0]), 1), (np.array([0.0, 1.0]), 1)]
        )
        np.testing.assert_allclose(condition_report(design), 100.0, rtol=1e-12)


class TestSingularSystems:
    def test_rank_deficient_ols_raises(self):
        # second column is a copy of the first
        rows = [(np.array([1.0, 1.0]), 1), (np.array([2.0, 2.0]), -1)]
        with pytest.raises(SingularSystem):
            fit(build_design(rows), FitConfig(method="ols"))

    def test_ridge_regularizes_rank_deficiency(self):
        rows = [(np.array([1.0, 1.0]), 1), (np.array([2.0, 2.0]), -1)]
        result = fit(build_design(rows), FitConfig(method="ridge", alpha=0.5))
        oracle = normal_equation_oracle(
            np.array([r[0] for r in rows]), np.array([1.0, -1.0]), 0.5
        )
        np.testing.assert_allclose(result.weights, oracle, rtol=1e-10)

    def test_condition_attached_to_error(self):
        rows = [(np.array([1.0, 1.0]), 1), (np.array([2.0, 2.0]), -1)]
        with pytest.raises(SingularSystem) as exc:
            fit(build_design(rows), FitConfig(method="ols"))
        assert exc.value.condition is None or exc.value.condition > 1e12


class TestFitConfig:
    def test_unknown_method(self):
        with pytest.raises(InvalidInput):
            FitConfig(method="lasso")

    def test_negative_alpha(self):
        with pytest.raises(InvalidInput):
            FitConfig(method="ridge", alpha=-1.0)

    def test_ols_ignores_alpha(self):
        cfg = FitConfig(method="ols", alpha=5.0)
        assert cfg.effective_alpha == 0.0


class TestFitWeightsConvenience:
    def test_matches_fit(self):
        rng = np.random.default_rng(5)
        F = rng.uniform(-1, 1, size=(30, 5))
        y = rng.choice([-1, 1], size=30)
        a = fit_weights(F, y, method="ridge", alpha=2.0)
        b = fit(build_design(zip(F, y)), FitConfig(method="ridge", alpha=2.0))
        np.testing.assert_array_equal(a.weights, b.weights)


class TestEstimator:
    def test_clone_roundtrip(self):
        est = StemWeightRegressor(method="ridge", alpha=3.5)
        copy = clone(est)
        assert copy.get_params() == est.get_params()
        assert not hasattr(copy, "coef_")

    def test_unfitted_raises(self):
        est = StemWeightRegressor()
        with pytest.raises(NotFittedError):
            est.predict(np.zeros((2, 3)))
        with pytest.raises(NotFittedError):
            est.decision_function(np.zeros((2, 3)))

    def test_feature_count_enforced_after_fit(self):
        rng = np.random.default_rng(2)
        est = StemWeightRegressor().fit(
            rng.uniform(-1, 1, (20, 4)), rng.choice([-1.0, 1.0], 20)
        )
        assert est.n_features_in_ == 4
        with pytest.raises(ValueError):
            est.predict(np.zeros((3, 5)))

    def test_fit_predict_roundtrip(self):
        # least squares on sign labels recovers the direction up to a
        # small angle that shrinks like 1/sqrt(n); n=1000 leaves margin
        rng = np.random.default_rng(9)
        w_true = np.array([1.0, -0.5, 0.25])
        X = rng.uniform(-1, 1, size=(1000, 3))
        y = np.sign(X @ w_true)
        y[y == 0] = 1.0
        est = StemWeightRegressor(method="ols").fit(X, y)
        assert est.n_features_in_ == 3
        direction = est.coef_ / np.linalg.norm(est.coef_)
        truth = w_true / np.linalg.norm(w_true)
        assert float(direction @ truth) >= 0.99
        agreement = np.mean(est.predict(X) == y)
        assert agreement >= 0.95

    def test_decision_function_matches_predict_weighted(self):
        from stemsim.similarity import predict_weighted

        rng = np.random.default_rng(21)
        X = rng.uniform(-2, 2, size=(50, 7))
        y = rng.choice([-1.0, 1.0], size=50)
        est = StemWeightRegressor(method="ridge", alpha=0.3).fit(X, y)
        scores = est.decision_function(X)
        for i in range(50):
            assert scores[i] == predict_weighted(X[i], est.coef_).score

    def test_get_params_roundtrip(self):
        est = StemWeightRegressor(method="ridge", alpha=2.0)
        params = est.get_params()
        clone = StemWeightRegressor(**params)
        assert clone.get_params() == params
