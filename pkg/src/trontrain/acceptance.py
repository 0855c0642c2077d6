"""End-to-end acceptance checks.

Each ``criterion_*`` function runs one experiment and returns a
:class:`Criterion` with the measured quantities, the tolerances used and a
pass flag. :func:`acceptance_suite` runs them all.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import glm_tron, neurotron, recursion, relu_tron
from .adversary import ConstantBeta, OracleConfig, make_realization_attack
from .data import Dataset
from .distributions import IsotropicGaussian, UniformBox, UnitBall, estimate_moments

SQUARE = UniformBox((-1.0, -1.0), (1.0, 1.0))
TEACHER = np.array([-1.0, 1.0])


@dataclass
class Criterion:
    """Outcome of one acceptance check."""

    key: str
    description: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.key}: {self.description} ({shown})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(_fmt(x)) for x in v) + "]"
    return str(v)


def log_slope(values: np.ndarray) -> float:
    """Least-squares slope of ``log(values)`` against the step index."""
    v = np.asarray(values, dtype=float)
    keep = v > 0
    t = np.arange(len(v))[keep]
    return float(np.polyfit(t, np.log(v[keep]), 1)[0])


def _mc_eigenvalue(dist, theta, expected, seed, n_samples, se_mult, abs_tol):
    m = estimate_moments(dist, TEACHER if dist.dim == 2 else np.ones(dist.dim), theta, None, n_samples, seed)
    est, se = m.lambda1_theta, m.std_err["lambda1_theta"]
    gap = abs(est - expected)
    ok = gap <= se_mult * se and gap <= abs_tol
    return ok, {"estimate": est, "expected": expected, "std_err": se, "gap": gap}


def criterion_eigenvalue_square(seed=0, theta=0.0, expected=1 / 6, n_samples=10**6, se_mult=3.0, abs_tol=0.005):
    """Monte Carlo truncated eigenvalue on the square against its reference value."""
    ok, meas = _mc_eigenvalue(SQUARE, theta, expected, seed, n_samples, se_mult, abs_tol)
    return Criterion(
        f"C1[theta={theta:g}]",
        f"MC lambda1 on the square matches {expected:.6g}",
        ok, meas, {"se_mult": se_mult, "abs_tol": abs_tol},
    )


def criterion_eigenvalue_gaussian(seed=0, n_samples=10**6, abs_tol=0.005):
    m = estimate_moments(IsotropicGaussian(1), [1.0], 0.0, None, n_samples, seed)
    gap = abs(m.lambda1_theta - 0.5)
    return Criterion(
        "C2", "MC lambda1 for a 1-d standard Gaussian equals 1/2",
        gap <= abs_tol, {"estimate": m.lambda1_theta, "gap": gap}, {"abs_tol": abs_tol},
    )


def criterion_noiseless(seed=0, batch=8, eps=1e-2, delta=0.1, repeats=50, min_success=0.9, se_mult=3.0, slope_slack=0.05):
    """Noiseless training: success rate, per-step contraction and log-linear decay."""
    m = estimate_moments(SQUARE, TEACHER, 0.0, None, 10**6, seed)
    s = relu_tron.case1_schedule(m, batch, float(TEACHER @ TEACHER), eps, delta)
    rep = relu_tron.relu_tron_train(SQUARE, OracleConfig(tuple(TEACHER), 0.0), s, repeats, seed, eps, delta)
    ratio, ratio_se = rep.step_ratios()
    excess = float(np.max(ratio - s.alpha_rate - se_mult * ratio_se))
    slope = log_slope(rep.mean_trajectory)
    steps = rep.sq_err.shape[1] - 1
    ok = (
        rep.success_rate >= min_success
        and steps + 1 <= 2 * s.predicted_T
        and excess <= 0
        and slope <= np.log(s.alpha_rate) + slope_slack
    )
    return Criterion(
        "C3", "noiseless batch-8 training succeeds and contracts at the predicted rate", ok,
        {
            "success_rate": rep.success_rate, "predicted_T": s.predicted_T, "alpha_rate": s.alpha_rate,
            "max_step_ratio": float(ratio.max()), "ratio_excess": excess, "log_slope": slope,
            "steps": steps,
        },
        {"min_success": min_success, "se_mult": se_mult, "slope_slack": slope_slack},
    )


def noisy_floor_runs(seed=0, thetas=(0.025, 0.05, 0.1), p=0.2, batch=8, delta=0.1, repeats=100):
    """Train with corrupted labels at several bounds.

    The target is twice the smallest admissible one, ``eps^2 delta = 2 theta^2 c3'/b1'``.
    Each run lasts twice the predicted horizon; the measured floor is the
    mean squared error over the second half.
    """
    out = []
    for th in thetas:
        m = estimate_moments(SQUARE, TEACHER, th, ConstantBeta(p), 10**6, seed)
        target = 2.0 * relu_tron.noise_floor(m, batch)
        eps = float(np.sqrt(target / delta))
        s = relu_tron.case2_schedule(m, batch, float(TEACHER @ TEACHER), eps, delta)
        oracle = OracleConfig(tuple(TEACHER), th, ConstantBeta(p))
        rep = relu_tron.relu_tron_train(SQUARE, oracle, s, repeats, seed, eps, delta, n_steps=2 * s.predicted_T)
        traj = rep.mean_trajectory
        out.append({
            "theta": th, "schedule": s, "target": target,
            "terminal_at_T": float(traj[s.predicted_T - 1]),
            "measured_floor": float(traj[-s.predicted_T:].mean()),
        })
    return out


def criterion_noisy(seed=0, ratio_range=(2.0, 8.0), **kw):
    runs = noisy_floor_runs(seed, **kw)
    below = all(r["terminal_at_T"] <= r["schedule"].predicted_floor + r["target"] for r in runs)
    floors = [r["measured_floor"] for r in runs]
    mono = all(a < b for a, b in zip(floors, floors[1:]))
    ratios = [b / a for a, b in zip(floors, floors[1:])]
    in_range = all(ratio_range[0] <= q <= ratio_range[1] for q in ratios)
    return Criterion(
        "C4", "corrupted training settles below the predicted floor, floors grow like theta^2",
        below and mono and in_range,
        {
            "terminal": [r["terminal_at_T"] for r in runs],
            "predicted_floor": [r["schedule"].predicted_floor for r in runs],
            "measured_floor": floors, "ratios": ratios,
        },
        {"ratio_range": ratio_range},
    )


def criterion_batch_monotone(seed=0, batches=(1, 2, 4, 8, 16, 32), eps=1e-2, delta=0.1, repeats=50, grid_slack=1):
    m = estimate_moments(SQUARE, TEACHER, 0.0, None, 10**6, seed)
    oracle = OracleConfig(tuple(TEACHER), 0.0)
    pred, emp = [], []
    for b in batches:
        s = relu_tron.case1_schedule(m, b, float(TEACHER @ TEACHER), eps, delta)
        rep = relu_tron.relu_tron_train(SQUARE, oracle, s, repeats, seed, eps, delta)
        pred.append(s.predicted_T)
        emp.append(rep.empirical_T())
    pred_ok = all(a >= b for a, b in zip(pred, pred[1:]))
    emp_ok = None not in emp and all(b <= a + grid_slack for a, b in zip(emp, emp[1:]))
    return Criterion(
        "C5", "predicted and empirical horizons do not grow with the batch size",
        pred_ok and emp_ok, {"predicted_T": pred, "empirical_T": emp}, {"grid_slack": grid_slack},
    )


def criterion_realization(seed=0, distance=0.3, batch=8, repeats=20, tol=1e-3):
    direction = np.array([1.0, 1.0]) / np.sqrt(2.0)
    w_adv = TEACHER + distance * direction
    oracle = make_realization_attack(TEACHER, w_adv, float(np.sqrt(2.0)))
    m = estimate_moments(SQUARE, w_adv, oracle.theta_star / 2.0, None, 10**6, seed)
    s = relu_tron.realizable_schedule(m, batch, float(w_adv @ w_adv), tol, 0.1)
    rep = relu_tron.relu_tron_train(SQUARE, oracle, s, repeats, seed, tol, 0.1)
    err = float(np.max(np.linalg.norm(rep.final_w - w_adv, axis=1)))
    return Criterion(
        "C6", "labels realized by another ReLU pull training to that ReLU",
        err < tol, {"max_dist_to_w_adv": err, "theta_adv": oracle.theta_star}, {"tol": tol},
    )


def _unit(v):
    return v / np.linalg.norm(v)


def criterion_glm(seed=0, n=3, samples=200, eps=0.05, seeds=20, instances=100, theta_max=0.1):
    worst = 0.0
    act = glm_tron.relu_activation()
    cfg = glm_tron.GlmTronConfig(act, eps)
    for s in range(seeds):
        rng = np.random.default_rng([seed, s])
        X = UnitBall(n).draw(rng, samples)
        w = _unit(rng.standard_normal(n))
        tr = glm_tron.glm_tron_run(Dataset(X, act(X @ w)), cfg, w)
        worst = max(worst, float(tr.effective_erm[-1]))
        steps = len(tr.iterates) - 1
    acts = [glm_tron.relu_activation(), glm_tron.leaky_relu_activation(0.3),
            glm_tron.scaled_relu_activation(1.5), glm_tron.sigmoid_activation()]
    violations = 0
    for i in range(instances):
        rng = np.random.default_rng([seed, 1000 + i])
        dim = int(rng.integers(1, 7))
        a = acts[i % len(acts)]
        X = UnitBall(dim).draw(rng, int(rng.integers(10, 200)))
        w = _unit(rng.standard_normal(dim)) * rng.uniform(0.2, 3.0)
        theta = rng.uniform(0.0, theta_max)
        d = Dataset(X, a(X @ w) + rng.uniform(-theta, theta, size=len(X)))
        tr = glm_tron.glm_tron_run(d, glm_tron.GlmTronConfig(a, rng.uniform(0.02, 0.3)), w)
        W = float(np.max(np.linalg.norm(tr.iterates - w, axis=1)))
        flags = glm_tron.check_step_decrease(tr, d, a, w, glm_tron.residual_norm(d, a, w), W)
        violations += int(not all(flags))
    return Criterion(
        "C7", "GLM-Tron reaches the target on realizable data; step decrease holds under noise",
        worst < eps and violations == 0 and steps == 20,
        {"worst_effective_erm": worst, "steps": steps, "instances_violating": violations},
        {"eps": eps},
    )


def criterion_risk_certificate(seed=0, n=3, samples=200, eps=0.05, theta=0.1, redraws=200):
    rng = np.random.default_rng(seed)
    act = glm_tron.relu_activation()
    X = UnitBall(n).draw(rng, samples)
    w = _unit(rng.standard_normal(n))
    cfg = glm_tron.GlmTronConfig(act, eps)
    risks, W = [], 0.0
    for _ in range(redraws):
        xi = rng.uniform(-theta, theta, size=samples)
        tr = glm_tron.glm_tron_run(Dataset(X, act(X @ w) + xi), cfg, w)
        risks.append(tr.true_erm[-1])
        W = max(W, float(np.max(tr.w_norm_err)))
    bound = glm_tron.noise_risk_certificate(theta**2 / 3.0, act.lipschitz, eps, theta, W)
    avg = float(np.mean(risks))
    return Criterion(
        "C8", "average risk under uniform label noise respects the certificate",
        avg <= bound, {"mean_true_risk": avg, "certificate": bound, "W": W}, {},
    )


def criterion_neuro_two_point(max_steps=200, tol=1e-6):
    d = Dataset(np.array([[1.0], [-1.0]]), np.array([0.0, 0.0]))
    nc = neurotron.NetClass(np.ones((1, 1, 1)))
    M = np.ones((1, 1))
    lam = neurotron.data_lambda1(d, nc, M)
    s = neurotron.theorem_schedule(nc, M, 1.0, lam, 0.0, 1.0, tol)
    tr = neurotron.neurotron_run(d, nc, M, s.eta, max_steps + 1, w_init=[1.0])
    hit = np.flatnonzero(np.abs(tr.iterates[:, 0]) < tol)
    first = int(hit[0]) if hit.size else None
    return Criterion(
        "C9a", "two-point example converges to zero",
        first is not None and first <= max_steps, {"first_step_below_tol": first, "eta": s.eta}, {"tol": tol},
    )


def sampled_net_instance(seed=0, r=3, n=4, k=2, dof=50, samples=100, c_scale=0.1):
    """Realizable symmetric data for a sampled net class, with its reference weight."""
    rng = np.random.default_rng(seed)
    M = neurotron.sample_full_rank_M(r, n, dof, rng)
    M /= np.linalg.norm(M, 2)
    C = c_scale * rng.standard_normal((r, n)) / np.sqrt(n)
    nc = neurotron.sample_net_class(M, C, k)
    X = rng.standard_normal((samples, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X = np.vstack([X, -X])
    w_ref = rng.standard_normal(r)
    return Dataset(X, neurotron.net_forward(nc, w_ref, X)), nc, M, w_ref, rng


def criterion_neuro_sampled(seed=0, tol=1e-6, agree_tol=2e-6, slope_slack=0.05):
    d, nc, M, w_ref, rng = sampled_net_instance(seed)
    inits = [np.zeros(nc.r), rng.standard_normal(nc.r)]
    w_err0 = max(float(np.sum((w0 - w_ref) ** 2)) for w0 in inits)
    lam = neurotron.data_lambda1(d, nc, M)
    s = neurotron.theorem_schedule(nc, M, d.max_norm(), lam, 0.0, w_err0, tol)
    traces = [neurotron.neurotron_run(d, nc, M, s.eta, s.predicted_T, w0) for w0 in inits]
    firsts = []
    for tr in traces:
        hit = np.flatnonzero(np.linalg.norm(tr.iterates - w_ref, axis=1) < tol)
        firsts.append(int(hit[0]) + 1 if hit.size else None)
    agree = float(np.linalg.norm(traces[0].final - traces[1].final))
    sq = np.sum((traces[0].iterates - w_ref) ** 2, axis=1)
    sq = sq[sq > 1e-24]
    slope = log_slope(sq)
    ok = (
        None not in firsts and max(firsts) <= s.predicted_T
        and agree < agree_tol and slope <= np.log(s.alpha_rate) + slope_slack
    )
    return Criterion(
        "C9b", "sampled net class recovers the reference weight from two starts",
        ok, {"first_hit": firsts, "predicted_T": s.predicted_T, "agreement": agree, "log_slope": slope,
             "log_alpha": float(np.log(s.alpha_rate))},
        {"tol": tol, "agree_tol": agree_tol, "slope_slack": slope_slack},
    )


def random_symmetric_instance(rng):
    """Random net class, symmetric data with arbitrary labels, and a reference weight."""
    r = int(rng.integers(1, 4))
    n = int(rng.integers(r, 6))
    k = int(rng.integers(1, 3))
    alpha = float(rng.uniform(0.0, 0.9))
    M = rng.standard_normal((r, n))
    nc = neurotron.sample_net_class(M, 0.3 * rng.standard_normal((r, n)), k, alpha)
    X = rng.standard_normal((int(rng.integers(3, 40)), n)) * rng.uniform(0.2, 2.0)
    X = np.vstack([X, -X])
    return Dataset(X, rng.standard_normal(len(X))), nc, M, rng.standard_normal(r)


def criterion_neuro_inequalities(seed=0, instances=100, slack=1e-9, rel_tol=1e-9):
    worst_slack, worst_sym = np.inf, 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 2000 + i])
        d, nc, M, w_ref = random_symmetric_instance(rng)
        eta = float(rng.uniform(1e-3, 0.5)) / max(1.0, np.linalg.norm(M, 2) * d.max_norm() ** 2)
        tr = neurotron.neurotron_run(d, nc, M, eta, 20, rng.standard_normal(nc.r), tol=0.0)
        for lhs, rhs in neurotron.per_step_bound_check(tr, d, nc, M, w_ref, eta):
            worst_slack = min(worst_slack, (rhs - lhs) / max(1.0, abs(lhs), abs(rhs)))
        A = nc.patches[0]
        z1, z2 = rng.standard_normal(nc.r), rng.standard_normal(nc.r)
        lhs, rhs = neurotron.symmetry_identity(d, A, M, z1, z2, nc.alpha)
        worst_sym = max(worst_sym, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return Criterion(
        "C9c", "per-step inequality and symmetric-data identity hold on random instances",
        worst_slack >= -slack and worst_sym <= rel_tol,
        {"min_relative_slack": float(worst_slack), "max_identity_error": worst_sym},
        {"slack": slack, "rel_tol": rel_tol},
    )


def criterion_surrogate_gradient(seed=0, instances=20, rel_tol=1e-5, h=1e-6):
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 3000 + i])
        r, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        A1 = rng.standard_normal((r, n))
        alpha = float(rng.choice([0.0, rng.uniform(0, 0.9)]))
        d = Dataset(rng.standard_normal((30, n)), rng.standard_normal(30))
        w = rng.standard_normal(r)
        nc = neurotron.NetClass(A1[None], alpha)
        direction = neurotron.neurotron_direction(d, nc, A1, w)
        fd = np.array([
            (neurotron.surrogate_risk(d, A1, w + h * e, alpha) - neurotron.surrogate_risk(d, A1, w - h * e, alpha)) / (2 * h)
            for e in np.eye(r)
        ])
        worst = max(worst, float(np.linalg.norm(fd + direction) / max(np.linalg.norm(direction), 1e-12)))
    return Criterion(
        "C9d", "surrogate risk gradient equals minus the update direction",
        worst <= rel_tol, {"max_relative_error": worst}, {"rel_tol": rel_tol},
    )


def criterion_recursions(seed=0, draws=500, floor_tol=1e-10):
    res = {name: recursion.verify_draws(name, draws, seed) for name in ("case1", "case2", "lemma6")}
    ok = all(r["certified"] == draws for r in res.values()) and res["lemma6"]["max_floor_error"] <= floor_tol
    return Criterion(
        "C10", "every random valid recursion instance certifies at its predicted horizon", ok,
        {f"{k}_certified": v["certified"] for k, v in res.items()} | {"floor_error": res["lemma6"]["max_floor_error"]},
        {"draws": draws, "floor_tol": floor_tol},
    )


def acceptance_suite(seed: int = 0, tolerance_scale: float = 1.0) -> list[Criterion]:
    """Run every acceptance check.

    ``tolerance_scale`` multiplies the Monte Carlo tolerances; setting it
    to zero makes those checks fail, which is useful to confirm that they
    are live.
    """
    ts = tolerance_scale
    return [
        criterion_eigenvalue_square(seed, 0.0, 1 / 6, se_mult=3.0 * ts, abs_tol=0.005 * ts),
        criterion_eigenvalue_square(seed, 1.0, 1 / 96, se_mult=3.0 * ts, abs_tol=0.005 * ts),
        criterion_eigenvalue_gaussian(seed, abs_tol=0.005 * ts),
        criterion_noiseless(seed),
        criterion_noisy(seed),
        criterion_batch_monotone(seed),
        criterion_realization(seed),
        criterion_glm(seed),
        criterion_risk_certificate(seed),
        criterion_neuro_two_point(),
        criterion_neuro_sampled(seed),
        criterion_neuro_inequalities(seed),
        criterion_surrogate_gradient(seed),
        criterion_recursions(seed),
    ]
