import numpy as np
import pytest
from oracles import batch_means_se, kalman_smoother

from tvwhittle.exceptions import InvalidInputError, NumericalCollapseError
from tvwhittle.likelihood import LikelihoodSpec, prepare
from tvwhittle.pgas import linear_gaussian_model, observation_model, pgas_sweep


def run_chain(model, n_sweeps, Q, theta0, n_particles, seed):
    rng = np.random.default_rng(seed)
    d = np.atleast_2d(Q).shape[0]
    path = np.tile(theta0, (model.n_states, 1)).astype(float).reshape(model.n_states, d)
    out = np.empty((n_sweeps, model.n_states, d))
    for i in range(n_sweeps):
        path = pgas_sweep(model, path, theta0, Q, 1.0, n_particles, rng)
        out[i] = path
    return out


class TestKalmanOracle:
    def test_matches_dense_conditioning(self):
        rng = np.random.default_rng(0)
        n, q, r, a = 6, 0.3, 0.5, 1.2
        y = rng.standard_normal(n)
        # theta_j = theta_0 + sum of j increments
        L = np.tril(np.ones((n, n)))
        cov_theta = q * L @ L.T
        cov_y = a * a * cov_theta + r * np.eye(n)
        theta0 = 0.4
        gain = a * cov_theta @ np.linalg.inv(cov_y)
        mean = theta0 + gain @ (y - a * theta0)
        cov = cov_theta - gain @ (a * cov_theta)
        m_s, P_s = kalman_smoother(y, [a], r, [[q]], [theta0])
        np.testing.assert_allclose(m_s[:, 0], mean, rtol=1e-10)
        np.testing.assert_allclose(P_s[:, 0, 0], np.diag(cov), rtol=1e-10)


class TestPGAS:
    def test_smoothing_moments_scalar(self):
        rng = np.random.default_rng(1)
        n, Q, r = 10, np.array([[0.2]]), 0.4
        y = np.cumsum(rng.normal(0, np.sqrt(0.2), n)) + rng.normal(0, np.sqrt(r), n)
        model = linear_gaussian_model(y, [1.0], r)
        draws = run_chain(model, 4000, Q, np.zeros(1), 20, seed=2)[500:, :, 0]
        m_s, P_s = kalman_smoother(y, [1.0], r, Q, [0.0])
        se = batch_means_se(draws)
        assert np.all(np.abs(draws.mean(0) - m_s[:, 0]) < 4 * se)
        np.testing.assert_allclose(draws.var(0), P_s[:, 0, 0], rtol=0.15)

    def test_smoothing_means_bivariate(self):
        rng = np.random.default_rng(3)
        n, Q, r = 8, np.array([[0.1, 0.02], [0.02, 0.05]]), 0.3
        a = np.array([1.0, -0.5])
        y = rng.standard_normal(n)
        model = linear_gaussian_model(y, a, r)
        theta0 = np.array([0.2, -0.1])
        draws = run_chain(model, 4000, Q, theta0, 20, seed=4)[500:]
        m_s, _ = kalman_smoother(y, a, r, Q, theta0)
        se = batch_means_se(draws)
        assert np.all(np.abs(draws.mean(0) - m_s) < 4 * se + 1e-12)

    def test_deterministic(self):
        x = np.random.default_rng(5).standard_normal(60)
        data = prepare(x, LikelihoodSpec("dynamic", order=2, m=5))
        model = observation_model(data)
        ref = np.zeros((data.n_states, 2))
        Q = 0.01 * np.eye(2)
        a = pgas_sweep(model, ref, np.zeros(2), Q, 1.0, 10, np.random.default_rng(6))
        b = pgas_sweep(model, ref, np.zeros(2), Q, 1.0, 10, np.random.default_rng(6))
        c = pgas_sweep(model, ref, np.zeros(2), Q, 1.0, 10, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_degenerate_dynamics_two_particles(self):
        x = np.random.default_rng(8).standard_normal(80)
        data = prepare(x, LikelihoodSpec("block", order=1, N=20, S=10))
        model = observation_model(data)
        theta0 = np.array([0.3])
        ref = np.full((data.n_states, 1), 0.3)
        path = pgas_sweep(model, ref, theta0, [[1e-14]], 1.0, 2, np.random.default_rng(9))
        assert path.shape == (data.n_states, 1)
        assert np.max(np.abs(path - 0.3)) < 1e-5

    def test_time_domain_model_runs(self):
        x = np.random.default_rng(10).standard_normal(40)
        data = prepare(x, LikelihoodSpec("time_domain", order=2, sv=True))
        model = observation_model(data)
        assert model.first_active == 2 and model.sv
        path = pgas_sweep(model, np.zeros((40, 3)), np.zeros(3), 0.01 * np.eye(3), 1.0, 5,
                          np.random.default_rng(11))
        assert np.all(np.isfinite(path))

    def test_collapse_raises(self):
        # squared residuals overflow, so every log-weight is -inf
        model = linear_gaussian_model(np.full(5, 1e200), [1.0], 1.0)
        with pytest.raises(NumericalCollapseError, match="more particles"):
            pgas_sweep(model, np.zeros((5, 1)), np.zeros(1), [[0.1]], 1.0, 4, np.random.default_rng(0))

    def test_input_checks(self):
        with pytest.raises(InvalidInputError):
            linear_gaussian_model(np.ones(5), [1.0], 0.0)
        model = linear_gaussian_model(np.ones(5), [1.0], 1.0)
        with pytest.raises(InvalidInputError):
            pgas_sweep(model, np.zeros((5, 1)), np.zeros(1), [[0.1]], 1.0, 1, np.random.default_rng(0))
        with pytest.raises(InvalidInputError):
            pgas_sweep(model, np.zeros((4, 1)), np.zeros(1), [[0.1]], 1.0, 4, np.random.default_rng(0))
