import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trontrain import neurotron
from trontrain.acceptance import random_symmetric_instance, sampled_net_instance
from trontrain.data import Dataset
from trontrain.errors import AsymmetryError, DimensionError, HypothesisError
from trontrain.neurotron import NetClass, net_forward

TWO_POINT = Dataset([[1.0], [-1.0]], [0.0, 0.0])
UNIT = NetClass(np.ones((1, 1, 1)))


class TestNetClass:
    def test_single_patch_forward(self):
        A = np.array([[1.0, 2.0], [0.0, -1.0]])
        nc = NetClass(A[None], alpha=0.1)
        w, x = np.array([1.0, 3.0]), np.array([0.5, 1.0])
        z = w @ A @ x
        assert net_forward(nc, w, x) == pytest.approx(z if z >= 0 else 0.1 * z)

    def test_average_over_patches(self):
        nc = NetClass(np.array([[[1.0]], [[-1.0]]]))
        assert net_forward(nc, [1.0], [2.0]) == pytest.approx(1.0)

    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            net_forward(UNIT, [1.0, 2.0], [1.0])

    def test_sampled_class_mean(self):
        rng = np.random.default_rng(0)
        M, C = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
        nc = neurotron.sample_net_class(M, C, 3)
        assert nc.width == 6
        np.testing.assert_allclose(nc.mean_patch, M, atol=1e-14)

    def test_wishart_block(self):
        M = neurotron.sample_full_rank_M(3, 5, 4, np.random.default_rng(1))
        np.testing.assert_array_equal(M[:, 3:], 0.0)
        np.testing.assert_allclose(M[:, :3], M[:, :3].T)
        assert np.linalg.eigvalsh(M[:, :3])[0] > 0

    def test_json_round_trip(self):
        nc = neurotron.sample_net_class(np.eye(2, 3), np.ones((2, 3)), 1, 0.2)
        back = NetClass.from_json(nc.to_json())
        np.testing.assert_array_equal(back.patches, nc.patches)
        assert back.alpha == 0.2

    def test_consistency(self):
        nc = NetClass(np.eye(2)[None])
        assert neurotron.consistency_check(nc, np.zeros((2, 2)), np.eye(2)) == (False, 0.0)
        ok, lam = neurotron.consistency_check(nc, np.eye(2), np.eye(2))
        assert ok and lam == pytest.approx(1.0)


class TestTraining:
    def test_two_point_schedule(self):
        s = neurotron.theorem_schedule(UNIT, np.ones((1, 1)), 1.0, 1.0, 0.0, 1.0, 1e-6)
        assert s.a1 == pytest.approx(1.0) and s.a2 == pytest.approx(1.0)
        assert s.eta == pytest.approx(0.5)

    def test_two_point_contracts_geometrically(self):
        tr = neurotron.neurotron_run(TWO_POINT, UNIT, np.ones((1, 1)), 0.5, 10, [1.0])
        np.testing.assert_allclose(tr.iterates[:, 0], 0.75 ** np.arange(10))

    def test_start_at_reference_stops_immediately(self):
        d, nc, M, w_ref, _ = sampled_net_instance(3)
        tr = neurotron.neurotron_run(d, nc, M, 0.1, 100, w_ref)
        assert len(tr) == 1

    def test_trace_csv(self, tmp_path):
        tr = neurotron.neurotron_run(TWO_POINT, UNIT, np.ones((1, 1)), 0.5, 3, [1.0])
        tr.to_csv(tmp_path / "n.csv")
        lines = (tmp_path / "n.csv").read_text().splitlines()
        assert lines[0] == "t,w0,grad_norm,inf_norm_residual"
        assert len(lines) == 4

    def test_noisy_schedule_preconditions(self):
        nc, M = UNIT, np.ones((1, 1))
        low = neurotron.mu_lower_bound(nc, M, 1.0, 1.0)
        with pytest.raises(HypothesisError, match="mu"):
            neurotron.theorem_schedule(nc, M, 1.0, 1.0, 0.1, 1.0, 0.5, mu=low)
        with pytest.raises(HypothesisError, match="eps"):
            neurotron.theorem_schedule(nc, M, 1.0, 1.0, 0.5, 1.0, 0.1)
        s = neurotron.theorem_schedule(nc, M, 1.0, 1.0, 0.01, 1.0, 0.5)
        assert s.predicted_T >= 1 and s.floor < 0.25

    def test_terminal_iterate_within_ball_of_near_optimal_weights(self):
        d, nc, M, w_ref, rng = sampled_net_instance(4)
        noisy = Dataset(d.X, d.y + rng.uniform(-1e-3, 1e-3, len(d)))
        lam = neurotron.data_lambda1(noisy, nc, M)
        refs = [w_ref, w_ref + 1e-4 * rng.standard_normal(nc.r)]
        thetas = [neurotron.interpolation_error(noisy, nc, w) for w in refs]
        theta = max(thetas)
        mu = 1.5 * neurotron.mu_lower_bound(nc, M, noisy.max_norm(), lam)
        b1 = (1 + nc.alpha) * lam - noisy.max_norm() * np.linalg.norm(M, 2) / mu**2
        eps2 = 4 * np.linalg.norm(M, 2) * noisy.max_norm() * theta**2 * mu**2 / b1
        s = neurotron.theorem_schedule(nc, M, noisy.max_norm(), lam, theta, float(w_ref @ w_ref) * 2, np.sqrt(eps2), mu=mu)
        tr = neurotron.neurotron_run(noisy, nc, M, s.eta, s.predicted_T)
        for w in refs:
            assert np.sum((tr.final - w) ** 2) <= eps2


class TestInequalities:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6))
    def test_per_step_bound(self, seed):
        rng = np.random.default_rng(seed)
        d, nc, M, w_ref = random_symmetric_instance(rng)
        eta = 0.1 / (np.linalg.norm(M, 2) * d.max_norm() ** 2)
        tr = neurotron.neurotron_run(d, nc, M, eta, 10, rng.standard_normal(nc.r), tol=0.0)
        for lhs, rhs in neurotron.per_step_bound_check(tr, d, nc, M, w_ref, eta):
            assert lhs <= rhs + 1e-9 * max(1.0, abs(lhs), abs(rhs))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6))
    def test_symmetry_identity(self, seed):
        rng = np.random.default_rng(seed)
        d, nc, M, _ = random_symmetric_instance(rng)
        lhs, rhs = neurotron.symmetry_identity(d, nc.patches[0], M, rng.standard_normal(nc.r), rng.standard_normal(nc.r), nc.alpha)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6))
    def test_effective_risk_bound(self, seed):
        rng = np.random.default_rng(seed)
        d, nc, M, w_ref = random_symmetric_instance(rng)
        w = rng.standard_normal(nc.r)
        bound = (1 + nc.alpha) ** 2 * d.max_norm() ** 2 * np.sum((w - w_ref) ** 2) * np.mean(nc.patch_norms() ** 2)
        assert neurotron.effective_risk(d, nc, w_ref, w) <= bound * (1 + 1e-12)

    def test_requires_symmetric_data(self):
        d = Dataset([[1.0]], [0.0])
        with pytest.raises(AsymmetryError):
            neurotron.symmetry_identity(d, np.eye(1), np.eye(1), [1.0], [1.0], 0.0)


class TestSurrogate:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.0, 0.9))
    def test_gradient_is_minus_update(self, seed, alpha):
        rng = np.random.default_rng(seed)
        A1 = rng.standard_normal((2, 3))
        d = Dataset(rng.standard_normal((20, 3)), rng.standard_normal(20))
        w = rng.standard_normal(2)
        direction = neurotron.neurotron_direction(d, NetClass(A1[None], alpha), A1, w)
        np.testing.assert_allclose(neurotron.surrogate_risk_grad(d, A1, w, alpha), -direction, rtol=1e-12, atol=1e-14)
        h = 1e-6
        fd = [(neurotron.surrogate_risk(d, A1, w + h * e, alpha) - neurotron.surrogate_risk(d, A1, w - h * e, alpha)) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(fd, -direction, rtol=1e-5, atol=1e-7)
