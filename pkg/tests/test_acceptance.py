"""Acceptance criteria with every tolerance pinned here.

Each test prints one PASS/FAIL line, also collected into the terminal
summary.
"""
import numpy as np
import pytest

from trontrain import acceptance
from trontrain.distributions import example1_analytic

from conftest import ACCEPTANCE_LINES

SEED = 0
MC_SAMPLES = 10**6
LAMBDA_SE_MULT = 3.0
LAMBDA_ABS_TOL = 0.005
GAUSS_ABS_TOL = 0.005
NOISELESS_BATCH = 8
NOISELESS_EPS = 1e-2
NOISELESS_DELTA = 0.1
NOISELESS_REPEATS = 50
MIN_SUCCESS = 0.9
HORIZON_FACTOR = 2
RATIO_SE_MULT = 3.0
SLOPE_SLACK = 0.05
NOISY_THETAS = (0.025, 0.05, 0.1)
NOISY_ATTACK_PROB = 0.2
FLOOR_RATIO_RANGE = (2.0, 8.0)
BATCH_GRID = (1, 2, 4, 8, 16, 32)
BATCH_GRID_SLACK = 1
ADV_DISTANCE = 0.3
ADV_TOL = 1e-3
GLM_EPS = 0.05
GLM_STEPS = 20
GLM_SEEDS = 20
GLM_INSTANCES = 100
GLM_THETA_MAX = 0.1
CERT_REDRAWS = 200
CERT_THETA = 0.1
TWO_POINT_STEPS = 200
NEURO_TOL = 1e-6
NEURO_AGREE = 2e-6
NEURO_INSTANCES = 100
INEQ_SLACK = 1e-9
IDENTITY_REL_TOL = 1e-9
SURROGATE_REL_TOL = 1e-5
RECURSION_DRAWS = 500
FLOOR_TOL = 1e-10


def report(c):
    line = c.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return c


def test_c1_eigenvalue_square_theta_zero():
    c = report(acceptance.criterion_eigenvalue_square(SEED, 0.0, 1 / 6, MC_SAMPLES, LAMBDA_SE_MULT, LAMBDA_ABS_TOL))
    assert c.measured["gap"] <= LAMBDA_SE_MULT * c.measured["std_err"]
    assert c.measured["gap"] <= LAMBDA_ABS_TOL
    assert c.passed


def test_c1_eigenvalue_square_theta_one():
    # The reference 1/96 is the closed form at theta = 1/2; at theta = 1 the
    # truncation event {x2 - x1 > 2} is empty and the eigenvalue is 0.
    c = report(acceptance.criterion_eigenvalue_square(SEED, 1.0, 1 / 96, MC_SAMPLES, LAMBDA_SE_MULT, LAMBDA_ABS_TOL))
    assert c.measured["gap"] <= LAMBDA_SE_MULT * c.measured["std_err"], (
        f"estimate {c.measured['estimate']} vs 1/96; closed form gives {example1_analytic(1.0)[2]}"
    )
    assert c.measured["gap"] <= LAMBDA_ABS_TOL
    assert c.passed


def test_c1_reference_value_at_half():
    # companion check: 1/96 is reproduced at theta = 1/2
    c = report(acceptance.criterion_eigenvalue_square(SEED, 0.5, 1 / 96, MC_SAMPLES, LAMBDA_SE_MULT, LAMBDA_ABS_TOL))
    assert c.passed


def test_c1_tolerances_are_live():
    c = acceptance.criterion_eigenvalue_square(SEED, 0.0, 1 / 6, 10**5, 0.0, 0.0)
    assert not c.passed


def test_c2_gaussian_eigenvalue():
    c = report(acceptance.criterion_eigenvalue_gaussian(SEED, MC_SAMPLES, GAUSS_ABS_TOL))
    assert abs(c.measured["estimate"] - 0.5) <= GAUSS_ABS_TOL
    assert c.passed


def test_c3_noiseless_training():
    c = report(acceptance.criterion_noiseless(
        SEED, NOISELESS_BATCH, NOISELESS_EPS, NOISELESS_DELTA, NOISELESS_REPEATS, MIN_SUCCESS, RATIO_SE_MULT, SLOPE_SLACK
    ))
    m = c.measured
    assert m["success_rate"] >= MIN_SUCCESS
    assert m["steps"] + 1 <= HORIZON_FACTOR * m["predicted_T"]
    assert m["ratio_excess"] <= 0.0
    assert m["log_slope"] <= np.log(m["alpha_rate"]) + SLOPE_SLACK
    assert c.passed


def test_c4_noisy_floors():
    c = report(acceptance.criterion_noisy(SEED, FLOOR_RATIO_RANGE, thetas=NOISY_THETAS, p=NOISY_ATTACK_PROB))
    floors = c.measured["measured_floor"]
    assert all(a < b for a, b in zip(floors, floors[1:]))
    assert all(FLOOR_RATIO_RANGE[0] <= q <= FLOOR_RATIO_RANGE[1] for q in c.measured["ratios"])
    assert c.passed


def test_c5_batch_monotonicity():
    c = report(acceptance.criterion_batch_monotone(SEED, BATCH_GRID, NOISELESS_EPS, NOISELESS_DELTA, NOISELESS_REPEATS, BATCH_GRID_SLACK))
    pred, emp = c.measured["predicted_T"], c.measured["empirical_T"]
    assert all(a >= b for a, b in zip(pred, pred[1:]))
    assert all(b <= a + BATCH_GRID_SLACK for a, b in zip(emp, emp[1:]))
    assert c.passed


def test_c6_realization_attack():
    c = report(acceptance.criterion_realization(SEED, ADV_DISTANCE, tol=ADV_TOL))
    assert c.measured["max_dist_to_w_adv"] < ADV_TOL
    assert c.passed


def test_c7_glm_tron():
    c = report(acceptance.criterion_glm(SEED, eps=GLM_EPS, seeds=GLM_SEEDS, instances=GLM_INSTANCES, theta_max=GLM_THETA_MAX))
    assert c.measured["steps"] == GLM_STEPS
    assert c.measured["worst_effective_erm"] < GLM_EPS
    assert c.measured["instances_violating"] == 0
    assert c.passed


def test_c8_risk_certificate():
    c = report(acceptance.criterion_risk_certificate(SEED, eps=GLM_EPS, theta=CERT_THETA, redraws=CERT_REDRAWS))
    assert c.measured["mean_true_risk"] <= c.measured["certificate"]
    assert c.passed


def test_c9a_two_point():
    c = report(acceptance.criterion_neuro_two_point(TWO_POINT_STEPS, NEURO_TOL))
    assert c.measured["first_step_below_tol"] <= TWO_POINT_STEPS
    assert c.passed


def test_c9b_sampled_class():
    c = report(acceptance.criterion_neuro_sampled(SEED, NEURO_TOL, NEURO_AGREE, SLOPE_SLACK))
    assert max(c.measured["first_hit"]) <= c.measured["predicted_T"]
    assert c.measured["agreement"] < NEURO_AGREE
    assert c.measured["log_slope"] <= c.measured["log_alpha"] + SLOPE_SLACK
    assert c.passed


def test_c9c_inequalities():
    c = report(acceptance.criterion_neuro_inequalities(SEED, NEURO_INSTANCES, INEQ_SLACK, IDENTITY_REL_TOL))
    assert c.measured["min_relative_slack"] >= -INEQ_SLACK
    assert c.measured["max_identity_error"] <= IDENTITY_REL_TOL
    assert c.passed


def test_c9d_surrogate_gradient():
    c = report(acceptance.criterion_surrogate_gradient(SEED, rel_tol=SURROGATE_REL_TOL))
    assert c.measured["max_relative_error"] <= SURROGATE_REL_TOL
    assert c.passed


def test_c10_recursions():
    c = report(acceptance.criterion_recursions(SEED, RECURSION_DRAWS, FLOOR_TOL))
    for key in ("case1_certified", "case2_certified", "lemma6_certified"):
        assert c.measured[key] == RECURSION_DRAWS
    assert c.measured["floor_error"] <= FLOOR_TOL
    assert c.passed
