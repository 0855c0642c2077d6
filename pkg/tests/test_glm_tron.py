import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from trontrain import glm_tron
from trontrain.data import Dataset
from trontrain.distributions import UnitBall
from trontrain.errors import HypothesisError
from trontrain.glm_tron import (
    Activation,
    GlmTronConfig,
    check_step_decrease,
    glm_tron_run,
    noise_risk_certificate,
    relu_activation,
)


class TestConfig:
    def test_rejects_steep_activation(self):
        with pytest.raises(HypothesisError):
            GlmTronConfig(glm_tron.scaled_relu_activation(2.0), 0.1)

    def test_rejects_decreasing_activation(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            GlmTronConfig(Activation("neg", lambda z: -0.5 * z, 0.5), 0.1)

    def test_rejects_understated_lipschitz(self):
        with pytest.raises(ValueError, match="steeper"):
            GlmTronConfig(Activation("relu", lambda z: np.maximum(z, 0), 0.5), 0.1)


class TestRun:
    def test_single_sample_example(self):
        d = Dataset([[1.0]], [0.5])
        tr = glm_tron_run(d, GlmTronConfig(relu_activation(), 0.5), [0.5])
        np.testing.assert_allclose(tr.iterates[1], [0.5])
        assert tr.effective_erm[1] == 0.0

    def test_starts_at_zero_and_uses_ceiling_horizon(self):
        rng = np.random.default_rng(0)
        X = UnitBall(3).draw(rng, 50)
        w = np.array([0.6, 0.0, 0.8])
        tr = glm_tron_run(Dataset(X, np.maximum(X @ w, 0)), GlmTronConfig(relu_activation(), 0.3), w)
        np.testing.assert_array_equal(tr.iterates[0], 0.0)
        assert len(tr.iterates) == 1 + 4

    def test_inputs_outside_ball(self):
        with pytest.raises(HypothesisError, match="x_i"):
            glm_tron_run(Dataset([[2.0]], [1.0]), GlmTronConfig(relu_activation(), 0.1))

    def test_trace_csv(self, tmp_path):
        d = Dataset([[0.5, 0.5]], [0.3])
        tr = glm_tron_run(d, GlmTronConfig(relu_activation(), 0.5), [0.3, 0.3])
        tr.to_csv(tmp_path / "g.csv")
        assert (tmp_path / "g.csv").read_text().splitlines()[0] == "t,w_norm_err,effective_erm,true_erm"


def noisy_instance(seed, n, S, theta, act):
    rng = np.random.default_rng(seed)
    X = UnitBall(n).draw(rng, S)
    w = rng.standard_normal(n)
    w *= rng.uniform(0.2, 2.0) / np.linalg.norm(w)
    return Dataset(X, act(X @ w) + rng.uniform(-theta, theta, S)), w


ACTS = [relu_activation(), glm_tron.leaky_relu_activation(0.2), glm_tron.scaled_relu_activation(1.7), glm_tron.sigmoid_activation()]


class TestStepDecrease:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 5), st.integers(5, 80), st.floats(0.0, 0.1), st.sampled_from(ACTS))
    def test_holds_with_exact_constants(self, seed, n, S, theta, act):
        d, w = noisy_instance(seed, n, S, theta, act)
        tr = glm_tron_run(d, GlmTronConfig(act, 0.1), w)
        W = float(np.max(tr.w_norm_err))
        assert all(check_step_decrease(tr, d, act, w, glm_tron.residual_norm(d, act, w), W))
        assert all(lhs <= rhs + 1e-12 for lhs, rhs in tr.step_decrease_checks)

    def test_noise_level_must_bound_residual(self):
        d, w = noisy_instance(0, 2, 30, 0.1, relu_activation())
        tr = glm_tron_run(d, GlmTronConfig(relu_activation(), 0.1), w)
        with pytest.raises(HypothesisError, match="noise_level"):
            check_step_decrease(tr, d, relu_activation(), w, 0.0, 10.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.0, 0.1))
    def test_bounded_noise_conclusion(self, seed, theta):
        act = relu_activation()
        d, w = noisy_instance(seed, 3, 100, theta, act)
        tr = glm_tron_run(d, GlmTronConfig(act, 0.05), w)
        W = float(np.max(tr.w_norm_err))
        assert tr.effective_erm.min() < glm_tron.noiseless_bound(1.0, 0.05, theta, W)


class TestCertificate:
    def test_uniform_noise_second_moment(self):
        second, _ = integrate.quad(lambda x: x * x / 0.2, -0.1, 0.1)
        np.testing.assert_allclose(second, 1 / 300, rtol=1e-12)

    def test_example(self):
        assert noise_risk_certificate(1 / 300, 1.0, 0.0, 0.1, 1.0) == pytest.approx(1 / 300 + 0.41)

    def test_rejects_lipschitz_two(self):
        with pytest.raises(HypothesisError):
            noise_risk_certificate(0.0, 2.0, 0.1, 0.1, 1.0)
