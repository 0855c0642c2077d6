"""Bounded label corruption can realize a different ReLU exactly.

The oracle answers with ``relu(w_adv . x)`` instead of ``relu(w_star . x)``;
the perturbation stays within the allowed bound on the support. Training
then converges to ``w_adv``, not ``w_star``.
"""
import numpy as np

from trontrain import OracleConfig, UniformBox, estimate_moments, make_realization_attack
from trontrain.relu_tron import realizable_schedule, relu_tron_train

square = UniformBox((-1.0, -1.0), (1.0, 1.0))
w_star = np.array([-1.0, 1.0])
w_adv = w_star + 0.3 * np.array([1.0, 1.0]) / np.sqrt(2.0)

oracle = make_realization_attack(w_star, w_adv, np.sqrt(2.0))
print(f"perturbation bound theta = {oracle.theta_star:.4f}")

m = estimate_moments(square, w_adv, oracle.theta_star / 2.0, None, 200_000, seed=1)
schedule = realizable_schedule(m, 8, float(w_adv @ w_adv), 1e-3, 0.1)
report = relu_tron_train(square, oracle, schedule, 10, 1, 1e-3, 0.1)
final = report.final_w.mean(axis=0)
print(f"mean final w       = {final}")
print(f"distance to w_adv  = {np.linalg.norm(final - w_adv):.2e}")
print(f"distance to w_star = {np.linalg.norm(final - w_star):.2e}")
