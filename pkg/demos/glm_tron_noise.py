"""GLM-Tron with a ReLU link, clean and with uniform label noise."""
import numpy as np

from trontrain import Dataset, UnitBall
from trontrain.glm_tron import GlmTronConfig, glm_tron_run, noise_risk_certificate, relu_activation

rng = np.random.default_rng(7)
act = relu_activation()
X = UnitBall(3).draw(rng, 200)
w = rng.standard_normal(3)
w /= np.linalg.norm(w)
cfg = GlmTronConfig(act, 0.05)

clean = glm_tron_run(Dataset(X, act(X @ w)), cfg, w)
print(f"clean: {len(clean.iterates) - 1} updates, effective risk {clean.effective_erm[-1]:.2e}")

theta = 0.1
noisy = glm_tron_run(Dataset(X, act(X @ w) + rng.uniform(-theta, theta, 200)), cfg, w)
W = float(np.max(noisy.w_norm_err))
cert = noise_risk_certificate(theta**2 / 3.0, act.lipschitz, 0.05, theta, W)
print(f"noisy: true risk {noisy.true_erm[-1]:.4f}, certificate {cert:.4f}")
