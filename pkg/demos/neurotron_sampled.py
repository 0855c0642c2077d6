"""Neuro-Tron on a sampled shared-weight net class.

Draws a net class and realizable symmetric data, computes the step size
and horizon, and tracks the distance to the reference weight.
"""
import numpy as np

from trontrain import neurotron
from trontrain.acceptance import sampled_net_instance

d, nc, M, w_ref, _ = sampled_net_instance(seed=0)
lam = neurotron.data_lambda1(d, nc, M)
s = neurotron.theorem_schedule(nc, M, d.max_norm(), lam, 0.0, float(w_ref @ w_ref), 1e-6)
print(f"width={nc.width} r={nc.r} lambda1={lam:.4g} eta={s.eta:.4g} predicted_T={s.predicted_T}")

tr = neurotron.neurotron_run(d, nc, M, s.eta, s.predicted_T)
dist = np.linalg.norm(tr.iterates - w_ref, axis=1)
for t in np.unique(np.geomspace(1, len(dist), 8).astype(int)) - 1:
    print(f"  t={t:6d}  |w_t - w_ref| = {dist[t]:.3e}")
