import dataclasses

import numpy as np
import pytest

from meboost.datagen import (
    ErrorGenerator,
    ScenarioSpec,
    build_block_covariance,
    default_scenario_spec,
    generate_replication,
    generate_scenario,
    sample_mvn,
)


class TestBlockCovariance:
    def test_single_block_pair(self):
        out = build_block_covariance(2, 2, 0.3)
        assert np.array_equal(out, np.array([[1.0, 0.3], [0.3, 1.0]]))

    def test_zero_correlation_is_identity(self):
        assert np.array_equal(build_block_covariance(4, 2, 0.0), np.eye(4))

    def test_two_blocks(self):
        out = build_block_covariance(4, 2, 0.5)
        expected = np.array(
            [
                [1.0, 0.5, 0.0, 0.0],
                [0.5, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.5],
                [0.0, 0.0, 0.5, 1.0],
            ]
        )
        assert np.array_equal(out, expected)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            build_block_covariance(5, 2, 0.3)
        with pytest.raises(ValueError):
            build_block_covariance(4, 2, 1.0)
        with pytest.raises(ValueError):
            build_block_covariance(4, 2, -0.1)

    def test_minimum_eigenvalue(self):
        # exchangeable blocks have spectrum {1 + (b-1) rho, 1 - rho}
        for rho in (0.0, 0.3, 0.9):
            sigma = build_block_covariance(30, 10, rho)
            w = np.linalg.eigvalsh(sigma)
            assert w[0] >= 1 - rho - 1e-12
            assert w[0] > 0


class TestSampleMvn:
    def test_deterministic(self):
        sigma = build_block_covariance(4, 2, 0.3)
        a = sample_mvn(10, sigma, seed=42)
        b = sample_mvn(10, sigma, seed=42)
        assert np.array_equal(a, b)

    def test_scalar_variance_scales_standard_stream(self):
        out = sample_mvn(3, np.array([[4.0]]), seed=7)
        stream = np.random.default_rng(7).standard_normal((3, 1))
        assert np.array_equal(out, 2.0 * stream)

    def test_empirical_covariance(self):
        n = 50_000
        out = sample_mvn(n, np.eye(2), seed=1)
        emp = out.T @ out / n
        assert np.max(np.abs(emp - np.eye(2))) < 0.03  # 4 / sqrt(n) margin

    def test_rejects_non_pd(self):
        with pytest.raises(ValueError):
            sample_mvn(5, np.array([[1.0, 2.0], [2.0, 1.0]]), seed=0)


class TestDefaultSpecs:
    def test_base_case_parameters(self):
        spec = default_scenario_spec(1)
        assert spec.n == 80
        assert spec.p == 100
        assert spec.sigma_eps == 1.5
        assert np.array_equal(spec.beta_true[:10], np.ones(10))
        assert np.array_equal(spec.beta_true[10:], np.zeros(90))
        assert np.array_equal(spec.delta_assumed, 0.75 * np.eye(100))

    def test_varying_variance_endpoints(self):
        spec = default_scenario_spec(2)
        diag = np.diag(spec.delta_assumed)
        # 0.3375 + 0.075 * j at j = 1 and j = 10
        assert diag[0] == pytest.approx(0.4125)
        assert diag[9] == pytest.approx(1.0875)
        # pattern repeats across blocks
        assert np.allclose(diag[:10], diag[10:20])

    def test_alternating_zero_diagonal(self):
        spec = default_scenario_spec(5)
        diag = np.diag(spec.delta_assumed)
        assert np.array_equal(diag[0::2], np.zeros(50))
        assert np.array_equal(diag[1::2], np.full(50, 0.75))

    def test_out_of_range_id(self):
        for bad in (0, 11, -3):
            with pytest.raises(ValueError):
                default_scenario_spec(bad)

    def test_assumed_delta_matches_generator_for_well_specified(self):
        for sid in range(1, 6):
            spec = default_scenario_spec(sid)
            omega = spec.error_generator.covariance(spec.p)
            assert np.allclose(spec.delta_assumed, omega, atol=1e-12), sid

    def test_assumed_delta_mismatch_for_misspecified(self):
        assert np.array_equal(np.diag(default_scenario_spec(6).delta_assumed), np.full(100, 1.5))
        assert np.array_equal(np.diag(default_scenario_spec(7).delta_assumed), np.full(100, 0.375))
        # scenario 8 assumes a diagonal though the truth is block-correlated
        spec8 = default_scenario_spec(8)
        assert np.array_equal(spec8.delta_assumed, 0.75 * np.eye(100))
        assert spec8.error_generator.covariance(100)[0, 1] == pytest.approx(0.75 * 0.3)

    def test_uniform_variance_matches_assumed(self):
        spec = default_scenario_spec(9)
        # Var(U(-1.5, 1.5)) = 3^2 / 12 = 0.75
        gen_var = spec.error_generator.covariance(100)[0, 0]
        assert gen_var == pytest.approx(0.75)
        assert spec.delta_assumed[0, 0] == pytest.approx(0.75)


class TestGenerateScenario:
    def test_bit_identical_repeats(self):
        spec = default_scenario_spec(1)
        a = generate_scenario(spec, 123)
        b = generate_scenario(spec, 123)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.W, b.W)
        assert np.array_equal(a.Y, b.Y)

    def test_scenarios_share_covariate_stream(self):
        s1 = generate_scenario(default_scenario_spec(1), 7)
        s9 = generate_scenario(default_scenario_spec(9), 7)
        assert np.array_equal(s1.X, s9.X)
        assert not np.array_equal(s1.W, s9.W)

    def test_base_case_error_variance(self):
        spec = dataclasses.replace(default_scenario_spec(1), n=10_000)
        data = generate_scenario(spec, 5)
        u = data.W - data.X
        assert abs(u.var() - 0.75) < 0.05
        assert np.max(np.abs(u.mean(axis=0))) < 0.05

    def test_overestimated_scenario_draws_base_noise(self):
        spec = dataclasses.replace(default_scenario_spec(6), n=10_000)
        data = generate_scenario(spec, 5)
        u = data.W - data.X
        assert abs(u.var() - 0.75) < 0.05
        assert data.spec.delta_assumed[0, 0] == 1.5

    def test_zero_variance_columns_exact(self):
        data = generate_scenario(default_scenario_spec(5), 11)
        u = data.W - data.X
        assert np.array_equal(u[:, 0::2], np.zeros((80, 50)))
        assert np.all(u[:, 1::2] != 0)

    @pytest.mark.parametrize("sid", [1, 3])
    def test_empirical_error_covariance(self, sid):
        spec = dataclasses.replace(default_scenario_spec(sid), n=10_000)
        data = generate_scenario(spec, 2)
        u = data.W - data.X
        emp = u.T @ u / spec.n
        omega = spec.error_generator.covariance(spec.p)
        assert np.max(np.abs(emp - omega)) < 0.05

    def test_shifted_exponential_centering_and_skew(self):
        spec = dataclasses.replace(default_scenario_spec(10), n=10_000)
        data = generate_scenario(spec, 9)
        u = (data.W - data.X).ravel()
        assert abs(u.mean()) < 0.02
        skew = np.mean((u - u.mean()) ** 3) / u.std() ** 3
        assert skew > 0.5
        assert abs(u.var() - 0.75) < 0.05

    def test_uniform_bounds(self):
        data = generate_scenario(default_scenario_spec(9), 3)
        u = data.W - data.X
        assert np.all(u >= -1.5) and np.all(u <= 1.5)

    def test_response_model(self):
        spec = dataclasses.replace(default_scenario_spec(1), n=20_000)
        data = generate_scenario(spec, 4)
        resid = data.Y - data.X @ spec.beta_true
        assert abs(resid.std() - 1.5) < 0.05

    def test_replication_pair_is_independent_and_deterministic(self):
        spec = default_scenario_spec(1)
        train, test = generate_replication(spec, 31)
        train2, test2 = generate_replication(spec, 31)
        assert np.array_equal(train.X, train2.X)
        assert np.array_equal(test.Y, test2.Y)
        assert not np.array_equal(train.X, test.X)
        assert train.X.shape == test.X.shape


class TestScenarioSpecSerialization:
    @pytest.mark.parametrize("sid", range(1, 11))
    def test_json_round_trip(self, sid):
        spec = default_scenario_spec(sid)
        back = ScenarioSpec.from_json(spec.to_json())
        assert back.scenario_id == spec.scenario_id
        assert back.n == spec.n and back.p == spec.p
        assert back.phi == spec.phi
        assert back.sigma_eps == spec.sigma_eps
        assert np.array_equal(back.beta_true, spec.beta_true)
        assert np.array_equal(back.delta_assumed, spec.delta_assumed)
        assert back.error_generator == spec.error_generator

    def test_invariant_validation(self):
        spec = default_scenario_spec(1)
        with pytest.raises(ValueError):
            ScenarioSpec(
                scenario_id=1,
                n=10,
                p=9,
                block_size=2,
                phi=0.3,
                beta_true=np.zeros(9),
                sigma_eps=1.0,
                error_generator=spec.error_generator,
                delta_assumed=np.eye(9),
            )
        bad_delta = np.eye(100)
        bad_delta[0, 1] = 0.2
        with pytest.raises(ValueError):
            dataclasses.replace(spec, delta_assumed=bad_delta)

    def test_unknown_generator_kind(self):
        with pytest.raises(ValueError):
            ErrorGenerator("triangular", {"variance": 1.0})
