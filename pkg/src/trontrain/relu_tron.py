"""Mini-batch training of a single ReLU gate under bounded label corruption.

The update uses only samples whose label exceeds the corruption bound:

    g_t = -(1/b) sum_i 1{y_i > theta_star} (y_i - w_t.x_i) x_i
    w_{t+1} = w_t - eta * g_t

Schedules come from scalar recursions on ``X_t = ||w_t - w_star||^2``:
a noiseless one (``theta_star = 0``) and a noisy one whose error settles at
a floor proportional to ``theta_star^2``.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import recursion
from .adversary import OracleConfig, respond
from .data import format_float
from .distributions import MomentEstimates
from .errors import AlreadyConverged, DimensionError, HypothesisError
from .linalg import as_vector


def gradient_proxy(w, X, y, theta_star: float) -> np.ndarray:
    """Thresholded gradient proxy for one mini-batch.

    Parameters
    ----------
    w : array_like, shape (n,)
        Current iterate.
    X : array_like, shape (b, n)
        Batch inputs.
    y : array_like, shape (b,)
        Batch labels.
    theta_star : float
        Samples with ``y <= theta_star`` are ignored.

    Returns
    -------
    ndarray, shape (n,)
    """
    w = as_vector(w, "w")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape != (y.shape[0], w.shape[0]):
        raise DimensionError(f"batch shape {X.shape} incompatible with w {w.shape} and y {y.shape}")
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    keep = y > theta_star
    resid = np.where(keep, y - X @ w, 0.0)
    return -(resid @ X) / X.shape[0]


def relu_tron_step(w, X, y, theta_star: float, eta: float) -> np.ndarray:
    """One update ``w - eta * g`` with the thresholded gradient proxy."""
    return as_vector(w, "w") - eta * gradient_proxy(w, X, y, theta_star)


@dataclass(frozen=True)
class CaseConstants:
    """Schedule constants of the error recursion.

    The recursion reads ``X_{t+1} <= alpha_rate * X_t + beta`` with
    ``alpha_rate = 1 - eta*b1p + eta**2*c1p`` and, in the noisy case,
    additive terms ``theta_star**2 * (eta**2 * c2p + eta * c3p)``.

    Attributes
    ----------
    case : str
        ``"noiseless"`` or ``"noisy"``.
    b1p, c1p, c2p, c3p : float
        Recursion coefficients (``c2p``, ``c3p`` exclude ``theta_star**2``).
    c2p_alt : float
        Alternative normalisation of ``c2p`` with the bracket divided by
        ``beta1`` instead of the batch size; kept for comparison only.
    eta : float
        Step size.
    gamma, K, delta0 : float or None
        Free factors of the schedule.
    predicted_T : int
        Iterate index ``T`` with worst-case ``X_T <= eps**2 * delta``.
    predicted_floor : float
        Fixed point of the worst-case recursion.
    alpha_rate : float
        Contraction factor.
    target : float
        ``eps**2 * delta``.
    batch : int
    theta_star : float
    """

    case: str
    b1p: float
    c1p: float
    c2p: float
    c3p: float
    eta: float
    predicted_T: int
    predicted_floor: float
    alpha_rate: float
    target: float
    batch: int
    theta_star: float
    gamma: float | None = None
    K: float | None = None
    delta0: float | None = None
    c2p_alt: float | None = None
    hypotheses: tuple = field(default_factory=tuple, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hypotheses"] = [{"name": h.name, "holds": h.holds, "margin": h.margin} for h in self.hypotheses]
        return d


def _check_common(m: MomentEstimates, b: int, w_err0: float, eps: float, delta: float) -> float:
    if int(b) != b or b < 1:
        raise ValueError("batch size must be a positive integer")
    if not (eps > 0 and 0 < delta < 1):
        raise ValueError("need eps > 0 and 0 < delta < 1")
    if not m.lambda1_theta > 0:
        raise HypothesisError("lambda1 > 0 (truncated second moment positive definite)", m.lambda1_theta)
    target = eps**2 * delta
    if target >= w_err0:
        raise AlreadyConverged(f"eps^2 delta = {target:.6g} already exceeds the initial error {w_err0:.6g}")
    return target


def case1_schedule(m: MomentEstimates, b: int, w_err0: float, eps: float, delta: float, delta0: float = 1.0) -> CaseConstants:
    """Schedule for uncorrupted labels (``theta_star = 0``).

    Parameters
    ----------
    m : MomentEstimates
        Constants at ``theta_star = 0``.
    b : int
        Batch size.
    w_err0 : float
        Initial squared error ``||w_1 - w_star||^2``.
    eps, delta : float
        Target ``P(||w_T - w_star||^2 > eps^2) <= delta``.
    delta0 : float
        Slack in the step size ``eta = b1 / ((1 + delta0) c1)``.

    Returns
    -------
    CaseConstants
    """
    if m.theta_star != 0:
        raise ValueError("noiseless schedule needs moments at theta_star = 0")
    return _noiseless(m, b, w_err0, eps, delta, delta0)


def realizable_schedule(
    m: MomentEstimates, b: int, w_err0: float, eps: float, delta: float, delta0: float = 1.0
) -> CaseConstants:
    """Schedule when labels are exactly ``relu(w_ref.x)`` but the update thresholds at ``theta``.

    Thresholding keeps exactly the samples with ``w_ref.x > theta`` and their
    residual is ``(w_ref - w).x``, so the noiseless recursion applies with
    the eigenvalue taken on that event. Pass moments computed at the
    realizing weight ``w_ref`` with ``theta_star = theta / 2``; the schedule
    reports ``theta_star = theta``.
    """
    c = _noiseless(m, b, w_err0, eps, delta, delta0)
    return CaseConstants(**{**c.__dict__, "theta_star": 2.0 * m.theta_star})


def _noiseless(m, b, w_err0, eps, delta, delta0):
    target = _check_common(m, b, w_err0, eps, delta)
    b1 = 2.0 * m.lambda1_theta
    c1 = (m.a4 + m.a2**2 * (b - 1)) / b
    rb = recursion.recurse_case1(b1, c1, delta0, w_err0, target)
    return CaseConstants(
        "noiseless", b1, c1, 0.0, 0.0, rb.eta, rb.predicted_T, 0.0, rb.alpha, target, int(b), 0.0,
        delta0=delta0, hypotheses=rb.hypotheses,
    )


def _noisy_coefficients(m: MomentEstimates, b: int, K: float):
    b1 = 2.0 * m.lambda1_theta - 1.0 / K
    c1 = ((1.0 + m.a4) + (1.0 + m.a2**2) * (b - 1)) / b
    bracket = m.beta3**2 + (m.beta2 * m.a1) ** 2 * (b - 1) + m.beta2 + (b - 1) * m.beta1**2
    c2 = bracket / b
    c2_alt = bracket / m.beta1 if m.beta1 > 0 else float("inf")
    c3 = K * m.beta1**2
    return b1, c1, c2, c3, c2_alt


def noise_floor(m: MomentEstimates, b: int, K: float | None = None) -> float:
    """Smallest admissible target ``theta_star^2 * c3p / b1p`` for the noisy schedule."""
    K = 2.0 / m.lambda1_theta if K is None else K
    b1, _, _, c3, _ = _noisy_coefficients(m, b, K)
    if b1 <= 0:
        raise HypothesisError("2 lambda1 - 1/K > 0", b1)
    return m.theta_star**2 * c3 / b1


def case2_schedule(
    m: MomentEstimates,
    b: int,
    w_err0: float,
    eps: float,
    delta: float,
    K: float | None = None,
    gamma: float | None = None,
) -> CaseConstants:
    """Schedule for corrupted labels (``theta_star > 0``).

    Parameters
    ----------
    m : MomentEstimates
        Constants at the oracle's ``theta_star``.
    b : int
        Batch size.
    w_err0 : float
        Initial squared error.
    eps, delta : float
        Target ``eps**2 * delta`` for the expected squared error; must lie
        above the floor.
    K : float, optional
        Young's inequality weight, needs ``K > 1 / (2 lambda1)``.
        Defaults to ``2 / lambda1``.
    gamma : float, optional
        Step factor. Defaults to twice its lower bound
        ``max(b1p**2/c1p, (target + theta^2 c2p/c1p) / (target - theta^2 c3p/b1p))``.

    Returns
    -------
    CaseConstants
    """
    target = _check_common(m, b, w_err0, eps, delta)
    lam = m.lambda1_theta
    K = 2.0 / lam if K is None else float(K)
    if not K > 1.0 / (2.0 * lam):
        raise HypothesisError("K > 1/(2 lambda1)", K - 1.0 / (2.0 * lam))
    b1, c1, c2, c3, c2_alt = _noisy_coefficients(m, b, K)
    th2 = m.theta_star**2
    if th2 > 0 and not target > th2 * c3 / b1:
        raise HypothesisError("eps^2 delta > theta*^2 c3'/b1' (target above the noise floor)", target - th2 * c3 / b1)
    rb = recursion.recurse_lemma6(b1, c1, th2 * c2, th2 * c3, w_err0, target, gamma)
    return CaseConstants(
        "noisy", b1, c1, c2, c3, rb.eta, rb.predicted_T, rb.floor, rb.alpha, target, int(b), m.theta_star,
        gamma=rb.gamma, K=K, c2p_alt=c2_alt, hypotheses=rb.hypotheses,
    )


@dataclass
class TrainReport:
    """Outcome of repeated seeded training runs.

    Attributes
    ----------
    sq_err : ndarray, shape (R, T)
        ``||w_t - w_star||^2`` for iterates ``t = 1..T`` of each repeat.
    final_w : ndarray, shape (R, n)
    eps, delta : float
        Success means a final squared error at most ``eps**2``.
    schedule : CaseConstants
    seed : int
    """

    sq_err: np.ndarray
    final_w: np.ndarray
    eps: float
    delta: float
    schedule: CaseConstants
    seed: int

    @property
    def n_repeats(self) -> int:
        return self.sq_err.shape[0]

    @property
    def final_sq_err(self) -> np.ndarray:
        return self.sq_err[:, -1]

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.final_sq_err <= self.eps**2))

    @property
    def mean_trajectory(self) -> np.ndarray:
        return self.sq_err.mean(axis=0)

    @property
    def stderr_trajectory(self) -> np.ndarray:
        R = self.n_repeats
        if R < 2:
            return np.zeros(self.sq_err.shape[1])
        return self.sq_err.std(axis=0, ddof=1) / np.sqrt(R)

    def step_ratios(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step mean and standard error of ``X_{t+1} / X_t`` across repeats."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.sq_err[:, 1:] / self.sq_err[:, :-1]
        mean = np.nanmean(r, axis=0)
        R = self.n_repeats
        se = np.nanstd(r, axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros_like(mean)
        return mean, se

    def empirical_T(self, level: float | None = None) -> int | None:
        """First iterate index whose mean squared error is at most ``level`` (default ``eps^2 delta``)."""
        level = self.eps**2 * self.delta if level is None else level
        hit = np.flatnonzero(self.mean_trajectory <= level)
        return int(hit[0]) + 1 if hit.size else None

    def summary(self) -> dict:
        return {
            "n_repeats": self.n_repeats,
            "n_iterates": int(self.sq_err.shape[1]),
            "eps": self.eps,
            "delta": self.delta,
            "seed": self.seed,
            "success_rate": self.success_rate,
            "mean_final_sq_err": float(self.final_sq_err.mean()),
            "empirical_T": self.empirical_T(),
            "schedule": self.schedule.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def write_trace(self, path, repeat: int) -> None:
        """Write ``t,sq_err`` rows for one repeat."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sq_err"])
            for t, v in enumerate(self.sq_err[repeat], start=1):
                w.writerow([t, format_float(v)])


def worker_count() -> int:
    """Worker pool size, capped by the ``TRONTRAIN_THREADS`` environment variable."""
    cap = os.environ.get("TRONTRAIN_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


_BLOCK = 256


def _train_chunk(dist, oracle, eta, b, n_steps, w_init, seqs):
    R = len(seqs)
    n = oracle.dim
    gens = [np.random.default_rng(s) for s in seqs]
    w_star = np.asarray(oracle.w_star)
    w = np.tile(w_init, (R, 1))
    sq = np.empty((R, n_steps + 1))
    sq[:, 0] = np.sum((w - w_star) ** 2, axis=1)
    theta = oracle.theta_star
    t = 0
    while t < n_steps:
        blk = min(_BLOCK, n_steps - t)
        Xs = np.empty((R, blk, b, n))
        ys = np.empty((R, blk, b))
        for r, g in enumerate(gens):
            X = dist.draw(g, blk * b)
            ys[r] = respond(oracle, X, g).y.reshape(blk, b)
            Xs[r] = X.reshape(blk, b, n)
        for s in range(blk):
            X, y = Xs[:, s], ys[:, s]
            pred = np.einsum("rbn,rn->rb", X, w)
            resid = np.where(y > theta, y - pred, 0.0)
            w = w + (eta / b) * np.einsum("rb,rbn->rn", resid, X)
            sq[:, t + s + 1] = np.sum((w - w_star) ** 2, axis=1)
        t += blk
    return sq, w


def relu_tron_train(
    dist,
    oracle: OracleConfig,
    schedule: CaseConstants,
    n_repeats: int,
    seed: int,
    eps: float,
    delta: float,
    n_steps: int | None = None,
    w_init=None,
) -> TrainReport:
    """Run independent seeded trainings and collect their error trajectories.

    Every repeat draws from its own stream spawned from ``seed``, so results
    do not depend on the worker count.

    Parameters
    ----------
    dist : distribution
        Input law with ``dim`` and ``draw(rng, count)``.
    oracle : OracleConfig
    schedule : CaseConstants
        Supplies ``eta`` and the batch size.
    n_repeats : int
    seed : int
    eps, delta : float
        Success threshold ``eps**2`` and the level for ``empirical_T``.
    n_steps : int, optional
        Number of updates; defaults to ``predicted_T - 1`` so the last
        iterate is ``w_T``.
    w_init : array_like, optional
        Starting point, zero by default.

    Returns
    -------
    TrainReport
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be positive")
    n = oracle.dim
    if dist.dim != n:
        raise DimensionError("distribution and oracle dimensions differ")
    w_init = np.zeros(n) if w_init is None else as_vector(w_init, "w_init")
    n_steps = schedule.predicted_T - 1 if n_steps is None else int(n_steps)
    seqs = np.random.SeedSequence(seed).spawn(n_repeats)
    workers = min(worker_count(), n_repeats)
    bounds = np.linspace(0, n_repeats, workers + 1).astype(int)
    chunks = [seqs[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    args = (dist, oracle, schedule.eta, schedule.batch, n_steps, w_init)
    if len(chunks) == 1:
        results = [_train_chunk(*args, chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(lambda c: _train_chunk(*args, c), chunks))
    sq = np.vstack([r[0] for r in results])
    final_w = np.vstack([r[1] for r in results])
    return TrainReport(sq, final_w, eps, delta, schedule, seed)


def expected_drift_bound(m: MomentEstimates, w, w_star) -> float:
    """Upper bound ``-lambda1 ||d||^2 + theta_star beta1 ||d||`` on the expected drift.

    The drift is ``E[1{y > theta_star} (y - w.x) (w - w_star).x]`` with
    ``d = w - w_star``.
    """
    d = np.linalg.norm(as_vector(w) - as_vector(w_star))
    return -m.lambda1_theta * d**2 + m.theta_star * m.beta1 * d


def estimate_drift(dist, oracle: OracleConfig, w, n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the per-sample drift at ``w``."""
    w = as_vector(w, "w")
    X = dist.draw(rng, n_samples)
    y = respond(oracle, X, rng).y
    d = w - np.asarray(oracle.w_star)
    q = np.where(y > oracle.theta_star, y - X @ w, 0.0) * (X @ d)
    return float(q.mean()), float(q.std(ddof=1) / np.sqrt(n_samples))
