import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from trontrain import relu_tron
from trontrain.adversary import ConstantBeta, OracleConfig
from trontrain.distributions import MomentEstimates, UniformBox, estimate_moments
from trontrain.errors import AlreadyConverged, HypothesisError

SQUARE = UniformBox((-1.0, -1.0), (1.0, 1.0))
TEACHER = np.array([-1.0, 1.0])


def _half_square_moment(power):
    f = lambda x2, x1: np.hypot(x1, x2) ** power / 4  # noqa: E731
    return integrate.dblquad(f, -1, 1, lambda x1: x1, lambda x1: 1.0)[0]


A_SQUARE = tuple(_half_square_moment(i) for i in range(1, 5))


def square_moments(theta=0.0, p=1.0):
    """Square constants by quadrature at theta = 0, with a constant attack probability ``p``."""
    a1, a2, a3, a4 = A_SQUARE
    lam = 1 / 6
    return MomentEstimates(a1, a2, a3, a4, p * a1, p * a2, p * a3, lam, theta, 0, provenance="analytic")


class TestUpdate:
    def test_single_sample_example(self):
        g = relu_tron.gradient_proxy([0.0], [[1.0]], [2.0], 0.0)
        np.testing.assert_allclose(g, [-2.0])
        np.testing.assert_allclose(relu_tron.relu_tron_step([0.0], [[1.0]], [2.0], 0.0, 0.3), [0.6])

    def test_all_labels_below_threshold(self):
        g = relu_tron.gradient_proxy([1.0, 2.0], [[1.0, 0.0], [0.0, 1.0]], [0.1, 0.2], 0.2)
        np.testing.assert_array_equal(g, [0.0, 0.0])

    def test_threshold_is_strict(self):
        g = relu_tron.gradient_proxy([0.0], [[1.0]], [0.5], 0.5)
        np.testing.assert_array_equal(g, [0.0])


class TestNoiselessSchedule:
    def test_rate_closed_form(self):
        m = square_moments()
        for b in (1, 8, 32):
            s = relu_tron.case1_schedule(m, b, 2.0, 1e-2, 0.1, delta0=1.0)
            lam, a2, a4 = m.lambda1_theta, m.a2, m.a4
            alpha = 1 - 4 * lam**2 / ((a2**2 + (a4 - a2**2) / b) * 4)
            assert s.alpha_rate == pytest.approx(alpha, rel=1e-12)
            assert s.eta == pytest.approx(2 * b * lam / ((a4 + a2**2 * (b - 1)) * 2), rel=1e-12)

    def test_gaussian_example(self):
        m = MomentEstimates(0.0, 0.5, 0.0, 1.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0)
        s = relu_tron.case1_schedule(m, 4, 1.0, 0.1, 0.1)
        assert s.b1p == pytest.approx(1.0)
        assert s.c1p == pytest.approx((1.5 + 0.25 * 3) / 4)

    @given(st.integers(1, 200))
    def test_horizon_non_increasing_in_batch(self, b):
        m = square_moments()
        assert relu_tron.case1_schedule(m, b + 1, 2.0, 1e-2, 0.1).predicted_T <= (
            relu_tron.case1_schedule(m, b, 2.0, 1e-2, 0.1).predicted_T
        )

    def test_already_converged(self):
        with pytest.raises(AlreadyConverged):
            relu_tron.case1_schedule(square_moments(), 8, 1e-6, 1e-2, 0.1)

    def test_degenerate_eigenvalue(self):
        m = MomentEstimates(0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0, 0.0, 0)
        with pytest.raises(HypothesisError, match="lambda1"):
            relu_tron.case1_schedule(m, 8, 2.0, 1e-2, 0.1)


class TestNoisySchedule:
    def test_coefficients(self):
        m = square_moments(0.1, 0.2)
        b = 8
        s = relu_tron.case2_schedule(m, b, 2.0, 0.5, 0.1)
        lam = m.lambda1_theta
        assert s.K == pytest.approx(2 / lam)
        assert s.b1p == pytest.approx(1.5 * lam)
        assert s.c1p == pytest.approx((1 + m.a4 + (1 + m.a2**2) * (b - 1)) / b)
        bracket = m.beta3**2 + (m.beta2 * m.a1) ** 2 * (b - 1) + m.beta2 + (b - 1) * m.beta1**2
        assert s.c2p == pytest.approx(bracket / b)
        assert s.c2p_alt == pytest.approx(bracket / m.beta1)
        assert s.c3p == pytest.approx(s.K * m.beta1**2)
        g = s.gamma
        floor = 0.01 * (s.c2p / s.c1p + g * s.c3p / s.b1p) / (g - 1)
        assert s.predicted_floor == pytest.approx(floor, rel=1e-12)

    def test_gamma_below_bound(self):
        with pytest.raises(HypothesisError, match="gamma"):
            relu_tron.case2_schedule(square_moments(0.1, 0.2), 8, 2.0, 0.5, 0.1, gamma=1.0)

    def test_target_below_floor(self):
        m = square_moments(0.5, 1.0)
        floor = relu_tron.noise_floor(m, 8)
        eps = np.sqrt(0.5 * floor / 0.1)
        with pytest.raises(HypothesisError, match="noise floor"):
            relu_tron.case2_schedule(m, 8, 2.0, eps, 0.1)

    def test_zero_bound_has_zero_floor(self):
        s = relu_tron.case2_schedule(square_moments(0.0), 8, 2.0, 0.1, 0.1)
        assert s.predicted_floor == 0.0
        assert 0 < s.alpha_rate < 1

    @given(st.floats(0.01, 0.3), st.floats(1.01, 2.0), st.floats(0.1, 0.5), st.floats(1.01, 2.0))
    def test_floor_monotone(self, theta, grow_theta, p, grow_p):
        def floor(th, pp):
            return relu_tron.case2_schedule(square_moments(th, pp), 8, 4.0, 1.5, 0.5, gamma=50.0).predicted_floor

        assert floor(theta * grow_theta, p) >= floor(theta, p)
        assert floor(theta, min(1.0, p * grow_p)) >= floor(theta, p)


@pytest.fixture(scope="module")
def setup():
    m = estimate_moments(SQUARE, TEACHER, 0.0, None, 100_000, 0)
    s = relu_tron.case1_schedule(m, 8, 2.0, 1e-2, 0.1)
    return s, OracleConfig(tuple(TEACHER), 0.0)


class TestTraining:
    def test_deterministic_and_thread_independent(self, setup, monkeypatch):
        s, oracle = setup
        monkeypatch.setenv("TRONTRAIN_THREADS", "1")
        a = relu_tron.relu_tron_train(SQUARE, oracle, s, 6, 42, 1e-2, 0.1)
        monkeypatch.setenv("TRONTRAIN_THREADS", "3")
        monkeypatch.setattr("os.cpu_count", lambda: 4)
        b = relu_tron.relu_tron_train(SQUARE, oracle, s, 6, 42, 1e-2, 0.1)
        np.testing.assert_array_equal(a.sq_err, b.sq_err)

    def test_repeat_streams_do_not_depend_on_repeat_count(self, setup):
        s, oracle = setup
        a = relu_tron.relu_tron_train(SQUARE, oracle, s, 2, 5, 1e-2, 0.1)
        b = relu_tron.relu_tron_train(SQUARE, oracle, s, 4, 5, 1e-2, 0.1)
        np.testing.assert_array_equal(a.sq_err, b.sq_err[:2])

    def test_converges(self, setup):
        s, oracle = setup
        rep = relu_tron.relu_tron_train(SQUARE, oracle, s, 10, 1, 1e-2, 0.1)
        assert rep.sq_err.shape == (10, s.predicted_T)
        assert rep.success_rate == 1.0

    def test_trace_csv(self, setup, tmp_path):
        s, oracle = setup
        rep = relu_tron.relu_tron_train(SQUARE, oracle, s, 1, 1, 1e-2, 0.1, n_steps=3)
        rep.write_trace(tmp_path / "t.csv", 0)
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,sq_err"
        assert len(lines) == 5
        assert float(lines[1].split(",")[1]) == 2.0


class TestDrift:
    @pytest.mark.parametrize("w", [[0.0, 0.0], [-0.5, 0.3], [-1.2, 1.1]])
    def test_expected_drift_below_bound(self, w):
        th, p = 0.1, 0.2
        m = estimate_moments(SQUARE, TEACHER, th, ConstantBeta(p), 200_000, 0)
        oracle = OracleConfig(tuple(TEACHER), th, ConstantBeta(p))
        mean, se = relu_tron.estimate_drift(SQUARE, oracle, w, 200_000, np.random.default_rng(1))
        assert mean <= relu_tron.expected_drift_bound(m, w, TEACHER) + 3 * se
