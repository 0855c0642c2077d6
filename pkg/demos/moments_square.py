"""Monte Carlo moment constants on the square ``[-1, 1]^2``.

Compares the estimated truncated eigenvalue with its closed form over a
range of thresholds, then prints the full constant set with standard errors.
"""
import numpy as np

from trontrain import ConstantBeta, UniformBox, estimate_moments, example1_analytic

square = UniformBox((-1.0, -1.0), (1.0, 1.0))
w_star = np.array([-1.0, 1.0])

print(" theta   estimate    closed form   std err")
for theta in (0.0, 0.25, 0.5, 0.75, 1.0):
    m = estimate_moments(square, w_star, theta, None, 400_000, seed=0)
    exact = example1_analytic(theta)[2]
    print(f" {theta:4.2f}   {m.lambda1_theta:.6f}   {exact:.6f}      {m.std_err['lambda1_theta']:.1e}")

m = estimate_moments(square, w_star, 0.1, ConstantBeta(0.2), 400_000, seed=0)
print(m.to_json())
