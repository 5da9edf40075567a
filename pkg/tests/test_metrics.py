import numpy as np
import pytest

from tvwhittle.exceptions import InvalidInputError
from tvwhittle.likelihood import LikelihoodSpec
from tvwhittle.metrics import ReplicationResult, common_times, efficiency, perturbation, rmse


class TestRMSE:
    def test_exact(self):
        assert rmse(np.ones((3, 2)), [1.0, 1.0]) == 0.0

    def test_single_error(self):
        assert rmse([[0.8]], [0.5]) == pytest.approx(0.3)

    def test_two_reps_two_params(self):
        est = np.array([[0.6, 0.4], [0.8, 0.6]])
        assert rmse(est, [0.5, 0.3]) == pytest.approx(np.sqrt(0.05))
        assert rmse(est, [0.5, 0.3]) == pytest.approx(0.2236, abs=1e-4)

    def test_time_average(self):
        truth = np.zeros((4, 1))
        est = np.zeros((2, 4, 1))
        est[0, 0, 0] = 0.4
        assert rmse(est, truth) == pytest.approx(np.sqrt(0.16 / 8))

    @pytest.mark.parametrize("c", [2.0, -0.5])
    def test_homogeneous(self, c):
        rng = np.random.default_rng(0)
        err = rng.normal(size=(5, 3))
        assert rmse(c * err, 0.0) == pytest.approx(abs(c) * rmse(err, 0.0))

    def test_permutation_invariant(self):
        err = np.random.default_rng(1).normal(size=(6, 2))
        assert rmse(err[::-1], 0.0) == pytest.approx(rmse(err, 0.0))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            rmse(np.ones((3, 2)), np.ones(3))


class TestEfficiency:
    @pytest.mark.parametrize("t,a,expected", [(0.2, 0.2, 1.0), (0.1, 0.2, 0.5), (0.3, 0.2, 1.5)])
    def test_ratio(self, t, a, expected):
        assert efficiency(t, a) == pytest.approx(expected)

    def test_zero_denominator(self):
        with pytest.raises(InvalidInputError):
            efficiency(0.1, 0.0)


class TestPerturbation:
    def test_identical(self):
        q = np.random.default_rng(2).normal(size=(3, 7, 2))
        assert perturbation(q, q) == 0.0

    def test_single_gap(self):
        assert perturbation([[[0.7]]], [[[0.5]]]) == pytest.approx(0.2)

    def test_two_quantiles(self):
        a = np.array([[[0.1], [0.3]]])
        assert perturbation(a, np.zeros_like(a)) == pytest.approx(np.sqrt(0.05))

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(2, 4, 7, 3))
        assert perturbation(a, b) == pytest.approx(perturbation(b, a))

    def test_grid_mismatch(self):
        with pytest.raises(InvalidInputError):
            perturbation(np.zeros((1, 7, 2)), np.zeros((1, 5, 2)))


class TestCommonTimes:
    def test_dynamic_trims_boundaries(self):
        specs = [LikelihoodSpec("time_domain"), LikelihoodSpec("dynamic", m=15), LikelihoodSpec("dynamic", m=30)]
        t = common_times(500, specs)
        assert t[0] == 31 and t[-1] == 470

    def test_no_dynamic(self):
        t = common_times(100, [LikelihoodSpec("block", N=20, S=10)])
        assert t[0] == 1 and t[-1] == 100


class TestReplicationResult:
    def test_summary(self):
        truth = np.zeros((4, 1))
        res = ReplicationResult(truth)
        q_ref = np.zeros((7, 4, 1))
        for rep in range(2):
            res.add("TD", np.full((4, 1), 0.1), q_ref)
            res.add("DW", np.full((4, 1), 0.2), q_ref + 0.3)
        rows = {r["method"]: r for r in res.summary("TD")}
        assert rows["TD"]["efficiency"] == pytest.approx(1.0)
        assert rows["TD"]["perturbation"] == 0.0
        assert rows["DW"]["efficiency"] == pytest.approx(0.5)
        assert rows["DW"]["perturbation"] == pytest.approx(0.3)
        assert rows["DW"]["n_rep"] == 2

    def test_summary_restricted_times(self):
        res = ReplicationResult(np.zeros((4, 1)))
        med = np.array([[5.0], [0.1], [0.1], [5.0]])
        res.add("TD", med, np.zeros((7, 4, 1)))
        rows = res.summary("TD", times=[2, 3])
        assert rows[0]["rmse"] == pytest.approx(0.1)
