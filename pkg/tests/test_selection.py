import numpy as np
import pytest

from meboost.boost import BoostConfig
from meboost.quadlasso import lambda_grid
from meboost.scores import MeasurementErrorModel
from meboost.selection import (
    cv_select_lasso,
    cv_select_meboost,
    kfold_split,
    poisson_deviance,
)


def zero_err(p):
    return MeasurementErrorModel(np.zeros((p, p)))


class TestKfoldSplit:
    def test_even_division(self):
        folds = kfold_split(80, 8, seed=0)
        assert len(folds) == 8
        assert all(len(f) == 10 for f in folds)

    def test_partition_property(self):
        folds = kfold_split(23, 4, seed=1)
        merged = np.concatenate(folds)
        assert len(merged) == 23
        assert np.array_equal(np.sort(merged), np.arange(23))

    def test_remainder_sizes(self):
        folds = kfold_split(7, 3, seed=2)
        assert sorted(len(f) for f in folds) == [2, 2, 3]

    def test_deterministic(self):
        a = kfold_split(40, 5, seed=3)
        b = kfold_split(40, 5, seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            kfold_split(10, 1, seed=0)
        with pytest.raises(ValueError):
            kfold_split(10, 11, seed=0)


class TestPoissonDeviance:
    def test_saturated_fit_is_zero(self):
        y = np.array([1.0, 4.0, 2.0])
        assert poisson_deviance(y, y) == 0.0

    def test_zero_count_convention(self):
        assert poisson_deviance(np.array([0.0]), np.array([2.0])) == pytest.approx(4.0)

    def test_direct_evaluation(self):
        # 2 * (3 log 3 - 2)
        assert poisson_deviance(np.array([3.0]), np.array([1.0])) == pytest.approx(
            2 * (3 * np.log(3.0) - 2.0)
        )

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            y = rng.poisson(3.0, 8).astype(float)
            mu = rng.uniform(0.2, 6.0, 8)
            d = poisson_deviance(y, mu)
            assert d >= 0.0
            if d == 0.0:
                assert np.array_equal(y, mu)

    def test_rejects_nonpositive_mu(self):
        with pytest.raises(ValueError):
            poisson_deviance(np.array([1.0]), np.array([0.0]))


class TestCvSelectMeboost:
    def test_single_tau_grid(self):
        rng = np.random.default_rng(1)
        W = rng.standard_normal((30, 4))
        Y = W @ np.array([1.0, 0.0, 0.0, -0.5]) + 0.2 * rng.standard_normal(30)
        res = cv_select_meboost(
            W, Y, "linear", zero_err(4), [0.4], BoostConfig(iterations=200), k_folds=3, seed=0
        )
        assert res.chosen_tau == 0.4

    def test_noiseless_orthogonal_design_recovers_support(self):
        rng = np.random.default_rng(2)
        n, p = 200, 10
        Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        X = Q * np.sqrt(n)
        beta = np.concatenate([np.full(5, 1.0), np.zeros(5)])
        Y = X @ beta  # no noise, no measurement error
        res = cv_select_meboost(
            X,
            Y,
            "linear",
            zero_err(p),
            [0.0, 0.5, 1.0],
            BoostConfig(gamma=0.02, iterations=600),
            k_folds=5,
            seed=0,
        )
        assert set(np.nonzero(res.final_beta)[0]) == set(range(5))

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        W = rng.standard_normal((40, 5))
        Y = W @ np.array([0.8, 0.0, -0.6, 0.0, 0.0]) + 0.3 * rng.standard_normal(40)
        args = (W, Y, "linear", zero_err(5), [0.2, 0.8], BoostConfig(iterations=150))
        a = cv_select_meboost(*args, k_folds=4, seed=9)
        b = cv_select_meboost(*args, k_folds=4, seed=9)
        assert np.array_equal(a.final_beta, b.final_beta)
        assert a.chosen_tau == b.chosen_tau

    def test_result_structure(self):
        rng = np.random.default_rng(4)
        W = rng.standard_normal((24, 3))
        Y = W @ np.array([1.0, 0.0, 0.0]) + 0.2 * rng.standard_normal(24)
        grid = [0.0, 0.6]
        res = cv_select_meboost(
            W, Y, "linear", zero_err(3), grid, BoostConfig(iterations=100), k_folds=4, seed=5
        )
        assert res.chosen_tau in grid
        assert len(res.per_fold) == 4
        # held-out indices are disjoint from training by construction
        for rec in res.per_fold:
            assert len(rec.test_indices) in (6,)
        merged = np.concatenate([rec.test_indices for rec in res.per_fold])
        assert np.array_equal(np.sort(merged), np.arange(24))
        # chosen tau minimizes the mean held-out loss over the grid
        losses = {t: res.tuning_table[t][0] for t in grid}
        assert losses[res.chosen_tau] == min(losses.values())
        # the refit stop is the path step closest to the mean minimizing L1
        stop_l1 = float(np.abs(res.final_beta).sum())
        gaps = np.abs(res.refit_path.l1 - res.chosen_l1_norm)
        assert abs(stop_l1 - res.chosen_l1_norm) <= float(gaps.min()) + 1e-12

    def test_poisson_family_uses_deviance(self):
        rng = np.random.default_rng(5)
        n, p = 120, 6
        X = rng.standard_normal((n, p)) * 0.5
        beta = np.array([0.6, 0.0, 0.0, -0.4, 0.0, 0.0])
        Y = rng.poisson(np.exp(X @ beta)).astype(float)
        res = cv_select_meboost(
            X,
            Y,
            "poisson",
            zero_err(p),
            [0.5, 1.0],
            BoostConfig(iterations=400, family="poisson"),
            k_folds=4,
            seed=6,
        )
        assert res.family == "poisson"
        assert res.final_beta.shape == (p,)
        assert 0 in set(np.nonzero(res.final_beta)[0])


class TestCvSelectLasso:
    def test_single_lambda(self):
        rng = np.random.default_rng(6)
        W = rng.standard_normal((30, 4))
        Y = W @ np.array([1.0, 0.0, 0.0, 0.0]) + 0.1 * rng.standard_normal(30)
        res = cv_select_lasso(W, Y, None, np.array([0.05]), k_folds=3, seed=0)
        assert res.chosen_lambda == pytest.approx(0.05)

    def test_pure_noise_selects_null_model(self):
        rng = np.random.default_rng(7)
        n, p = 60, 5
        W = rng.standard_normal((n, p))
        Y = rng.standard_normal(n)  # no signal
        lam_max = float(np.max(np.abs(W.T @ Y / n)))
        lambdas = lambda_grid(lam_max, 20, 0.05)
        res = cv_select_lasso(W, Y, None, lambdas, k_folds=5, seed=1)
        null_loss = res.tuning_table[float(lambdas[0])][0]
        chosen_loss = res.tuning_table[res.chosen_lambda][0]
        fold_nulls = [rec.losses[0] for rec in res.per_fold]
        null_se = np.std(fold_nulls, ddof=1) / np.sqrt(len(fold_nulls))
        assert np.all(res.final_beta == 0) or (null_loss - chosen_loss) <= null_se

    def test_cocolasso_with_zero_delta_matches_naive(self):
        rng = np.random.default_rng(8)
        W = rng.standard_normal((40, 4))
        Y = W @ np.array([0.9, -0.7, 0.0, 0.0]) + 0.2 * rng.standard_normal(40)
        lambdas = np.array([0.4, 0.2, 0.1, 0.05])
        a = cv_select_lasso(W, Y, None, lambdas, k_folds=4, seed=2, method="naive")
        b = cv_select_lasso(
            W, Y, zero_err(4), lambdas, k_folds=4, seed=2, method="cocolasso"
        )
        assert a.chosen_lambda == b.chosen_lambda
        assert np.max(np.abs(a.final_beta - b.final_beta)) < 1e-8

    def test_chosen_lambda_minimizes_mean_loss(self):
        rng = np.random.default_rng(9)
        W = rng.standard_normal((50, 6))
        Y = W @ np.array([1.2, 0.0, 0.5, 0.0, 0.0, 0.0]) + 0.3 * rng.standard_normal(50)
        lambdas = lambda_grid(0.8, 12, 0.01)
        res = cv_select_lasso(W, Y, None, lambdas, k_folds=5, seed=3)
        table_losses = [res.tuning_table[float(l)][0] for l in lambdas]
        assert res.tuning_table[res.chosen_lambda][0] == min(table_losses)

    def test_method_validation(self):
        with pytest.raises(ValueError):
            cv_select_lasso(np.ones((10, 2)), np.ones(10), None, [0.1], 2, 0, method="ridge")
        with pytest.raises(ValueError):
            cv_select_lasso(np.ones((10, 2)), np.ones(10), None, [0.1], 2, 0, method="cocolasso")
