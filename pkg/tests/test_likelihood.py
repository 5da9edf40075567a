import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.stats import multivariate_normal, norm

from tvwhittle.exceptions import DomainError, GeometryError, InvalidInputError
from tvwhittle.likelihood import (
    LikelihoodSpec,
    block_whittle_loglik,
    dynamic_whittle_loglik,
    loglik,
    prepare,
    time_domain_tvar_loglik,
)
from tvwhittle.modify import Modification
from tvwhittle.spectral import exact_ar1_loglik, periodogram, whittle_loglik
from tvwhittle.tvar import theta_to_phi

from oracles import naive_block, naive_dynamic, naive_sdf


def random_path(rng, n, p):
    return theta_to_phi(np.cumsum(rng.normal(0, 0.3, size=(n, p)), axis=0))


class TestPrepare:
    def test_time_domain_wraps_series(self):
        x = np.random.default_rng(0).standard_normal(50)
        data = prepare(x, LikelihoodSpec("time_domain"))
        np.testing.assert_array_equal(data.x, x)
        assert data.ordinates is None and data.n_states == 50 and data.n_obs == 48

    def test_block_shape(self):
        x = np.random.default_rng(1).standard_normal(1500)
        data = prepare(x, LikelihoodSpec("block", N=30, S=15))
        assert data.ordinates.shape == (99, 14)
        assert data.n_states == 99 and data.n_obs == 99 * 14

    def test_dynamic_shape(self):
        x = np.random.default_rng(2).standard_normal(1500)
        data = prepare(x, LikelihoodSpec("dynamic", m=15))
        assert data.ordinates.shape == (1470, 1)
        assert data.state_times[0] == 16 and data.state_times[-1] == 1485

    def test_geometry_error_propagates(self):
        with pytest.raises(GeometryError):
            prepare(np.ones(100), LikelihoodSpec("block", N=30, S=15))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"family": "spectral"},
            {"family": "block", "N": 30},
            {"family": "dynamic"},
            {"family": "dynamic", "m": 5, "N": 10, "S": 5},
            {"family": "time_domain", "modification": Modification("taper")},
            {"family": "time_domain", "order": 0},
        ],
    )
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InvalidInputError):
            LikelihoodSpec(**kwargs)

    @pytest.mark.parametrize(
        "spec,label",
        [
            (LikelihoodSpec("time_domain"), "TD"),
            (LikelihoodSpec("dynamic", m=15), "DW-m15"),
            (LikelihoodSpec("dynamic", m=15, modification=Modification("prewhiten")), "DW-m15-PW"),
            (LikelihoodSpec("block", N=30, S=15, modification=Modification("taper")), "BW-N30-S15-TA"),
            (LikelihoodSpec("dynamic", m=25, sv=True), "DW-m25-SV"),
        ],
    )
    def test_labels(self, spec, label):
        assert spec.label == label

    def test_clip_negative(self):
        x = np.random.default_rng(3).standard_normal(300)
        mod = Modification("boundary_correct")
        signed = prepare(x, LikelihoodSpec("dynamic", m=15, modification=mod))
        assert signed.ordinates.min() < 0
        clipped = prepare(x, LikelihoodSpec("dynamic", m=15, modification=Modification("boundary_correct", clip_negative=True)))
        np.testing.assert_array_equal(clipped.ordinates, np.maximum(signed.ordinates, 0))

    def test_with_ordinates_shape(self):
        data = prepare(np.random.default_rng(4).standard_normal(40), LikelihoodSpec("dynamic", m=5))
        with pytest.raises(InvalidInputError):
            data.with_ordinates(np.ones(3))


class TestBlockWhittle:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        p = 1 + seed % 3
        x = rng.standard_normal(120)
        data = prepare(x, LikelihoodSpec("block", order=p, N=20, S=10))
        phi = random_path(rng, data.n_states, p)
        s2 = rng.uniform(0.5, 2, size=data.n_states)
        expected = naive_block(x, 20, 10, phi, s2)
        assert block_whittle_loglik(data.periodogram, phi, s2) == pytest.approx(expected, rel=1e-9)
        assert loglik(data, phi, s2) == pytest.approx(expected, rel=1e-9)

    def test_single_segment_is_twice_whittle(self):
        x = np.random.default_rng(5).standard_normal(24)
        data = prepare(x, LikelihoodSpec("block", order=1, N=24, S=4))
        f = lambda w: naive_sdf([0.4], 1.3, w)
        assert loglik(data, [[0.4]], 1.3) == pytest.approx(2 * whittle_loglik(periodogram(x), f), rel=1e-12)

    def test_ordinates_equal_density(self):
        data = prepare(np.random.default_rng(6).standard_normal(60), LikelihoodSpec("block", order=1, N=20, S=10))
        c = 0.7
        flat = data.with_ordinates(np.full(data.ordinates.shape, c))
        phi = np.zeros((data.n_states, 1))
        assert loglik(flat, phi, 2 * np.pi * c) == pytest.approx(-data.n_obs * (np.log(c) + 1))

    def test_sigma2_maximiser(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(200)
        data = prepare(x, LikelihoodSpec("block", order=2, N=20, S=10))
        phi = random_path(rng, data.n_states, 2)
        res = minimize_scalar(lambda s: -loglik(data, phi, s), bounds=(1e-3, 20), method="bounded",
                              options={"xatol": 1e-10})
        # 2 pi |phi(e^{-iw})|^2 I equals I over the unit-variance density
        tilde = np.array([
            [data.ordinates[j, k] / naive_sdf(phi[j], 1.0, w) for k, w in enumerate(data.omegas[j])]
            for j in range(data.n_states)
        ])
        assert res.x == pytest.approx(tilde.sum() / data.n_obs, rel=1e-6)

    def test_errors(self):
        data = prepare(np.random.default_rng(8).standard_normal(60), LikelihoodSpec("block", order=1, N=20, S=10))
        with pytest.raises(InvalidInputError):
            loglik(data, np.zeros((3, 1)), 1.0)
        with pytest.raises(DomainError):
            loglik(data, np.zeros((5, 1)), -1.0)
        with pytest.raises(DomainError):
            loglik(data, np.full((5, 1), 1.5), 1.0)


class TestDynamicWhittle:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_naive_oracle(self, seed):
        rng = np.random.default_rng(100 + seed)
        p = 1 + seed % 3
        x = rng.standard_normal(80)
        m = 4 + seed
        data = prepare(x, LikelihoodSpec("dynamic", order=p, m=m))
        phi = random_path(rng, data.n_states, p)
        s2 = rng.uniform(0.5, 2, size=data.n_states)
        expected = naive_dynamic(x, m, phi, s2)
        assert dynamic_whittle_loglik(data.periodogram, phi, s2) == pytest.approx(expected, rel=1e-9)
        assert loglik(data, phi, s2) == pytest.approx(expected, rel=1e-9)

    def test_white_noise_optimum(self):
        x = np.random.default_rng(9).standard_normal(120)
        data = prepare(x, LikelihoodSpec("dynamic", order=1, m=10))
        phi = np.zeros((data.n_states, 1))
        res = minimize_scalar(lambda s: -loglik(data, phi, s), bounds=(1e-3, 20), method="bounded",
                              options={"xatol": 1e-10})
        assert res.x == pytest.approx(2 * np.pi * data.ordinates.sum() / data.n_obs, rel=1e-6)

    def test_ordinates_equal_density(self):
        data = prepare(np.random.default_rng(10).standard_normal(50), LikelihoodSpec("dynamic", order=1, m=5))
        phi = np.full((data.n_states, 1), 0.3)
        f = naive_sdf([0.3], 1.0, data.omegas[:, 0])
        exact = data.with_ordinates(f[:, None])
        assert loglik(exact, phi, 1.0) == pytest.approx(-np.sum(np.log(f) + 1), rel=1e-12)


class TestTimeDomain:
    def test_hand_example(self):
        x = np.array([0.0, 1.0, 2.0])
        expected = norm.logpdf(1.0, 0.0, 1.0) + norm.logpdf(2.0, 0.5, 1.0)
        assert time_domain_tvar_loglik(x, np.full((3, 1), 0.5), 1.0, 1) == pytest.approx(expected, rel=1e-14)

    def test_zero_coefficients_iid(self):
        x = np.random.default_rng(11).standard_normal(20)
        got = time_domain_tvar_loglik(x, np.zeros((20, 2)), 1.7)
        assert got == pytest.approx(norm.logpdf(x[2:], 0, np.sqrt(1.7)).sum(), rel=1e-12)

    @pytest.mark.parametrize("phi,s2", [(0.5, 1.0), (-0.8, 2.0)])
    def test_matches_exact_ar1_minus_initial(self, phi, s2):
        x = np.random.default_rng(12).standard_normal(30)
        initial = norm.logpdf(x[0], 0, np.sqrt(s2 / (1 - phi**2)))
        got = time_domain_tvar_loglik(x, np.full((30, 1), phi), s2, 1)
        assert got == pytest.approx(exact_ar1_loglik(x, phi, s2) - initial, abs=1e-10)

    def test_ar2_dense_conditional(self):
        phi, T = np.array([0.5, -0.3]), 8
        p = 2
        C = np.zeros((p, p))
        C[0] = phi
        C[1:, :-1] = np.eye(p - 1)
        V = np.linalg.solve(np.eye(4) - np.kron(C, C), np.eye(2).ravel() * [1, 0, 0, 0]).reshape(2, 2)
        acov = [V[0, 0], V[0, 1]]
        for k in range(2, T):
            acov.append(phi[0] * acov[k - 1] + phi[1] * acov[k - 2])
        acov = np.array(acov)
        cov = acov[np.abs(np.subtract.outer(np.arange(T), np.arange(T)))]
        x = np.random.default_rng(13).standard_normal(T)
        conditional = multivariate_normal(np.zeros(T), cov).logpdf(x) - multivariate_normal(
            np.zeros(2), cov[:2, :2]).logpdf(x[:2])
        assert time_domain_tvar_loglik(x, np.tile(phi, (T, 1)), 1.0) == pytest.approx(conditional, rel=1e-10)

    def test_time_varying_variance(self):
        x = np.random.default_rng(14).standard_normal(10)
        s2 = np.linspace(0.5, 2.0, 10)
        expected = norm.logpdf(x[1:], 0, np.sqrt(s2[1:])).sum()
        assert time_domain_tvar_loglik(x, np.zeros((10, 1)), s2) == pytest.approx(expected, rel=1e-12)

    def test_errors(self):
        x = np.ones(5)
        with pytest.raises(DomainError):
            time_domain_tvar_loglik(x, np.zeros((5, 1)), 0.0)
        with pytest.raises(InvalidInputError):
            time_domain_tvar_loglik(x, np.zeros((4, 1)), 1.0)
