"""GLM-Tron for a single non-decreasing Lipschitz activation.

Starting from ``w_1 = 0`` the iteration is

    w_{t+1} = w_t + (1/m) sum_i (y_i - sigma(w_t.x_i)) x_i

on inputs inside the unit ball.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import Dataset, format_float
from .errors import DimensionError, HypothesisError
from .linalg import as_vector, leaky_relu


@dataclass(frozen=True)
class Activation:
    """A non-decreasing activation with its Lipschitz constant."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float

    def __call__(self, z):
        return self.fn(np.asarray(z, dtype=float))


def relu_activation() -> Activation:
    return Activation("relu", lambda z: np.maximum(z, 0.0), 1.0)


def leaky_relu_activation(alpha: float) -> Activation:
    return Activation(f"leaky_relu({alpha})", lambda z: leaky_relu(z, alpha), 1.0)


def scaled_relu_activation(scale: float) -> Activation:
    """``scale * relu``, Lipschitz constant ``scale``."""
    return Activation(f"scaled_relu({scale})", lambda z: scale * np.maximum(z, 0.0), float(scale))


def sigmoid_activation() -> Activation:
    """Logistic function, Lipschitz constant ``1/4``."""
    return Activation("sigmoid", lambda z: 0.5 * (1.0 + np.tanh(0.5 * z)), 0.25)


ACTIVATIONS = {"relu": relu_activation, "sigmoid": sigmoid_activation}


@dataclass(frozen=True)
class GlmTronConfig:
    """Activation, target accuracy and iteration cap."""

    activation: Activation
    epsilon: float
    max_iters: int = 10_000

    def __post_init__(self):
        L = self.activation.lipschitz
        if not 0 < L < 2:
            raise HypothesisError("0 < L < 2", min(L, 2.0 - L))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        grid = np.linspace(-10.0, 10.0, 401)
        vals = self.activation(grid)
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError(f"activation {self.activation.name} is not non-decreasing")
        slopes = np.abs(np.diff(vals)) / np.diff(grid)
        if np.any(slopes > L * (1 + 1e-9)):
            raise ValueError(f"activation {self.activation.name} is steeper than L = {L}")


@dataclass
class GlmTronTrace:
    """Iterates of one run.

    Attributes
    ----------
    iterates : ndarray, shape (T + 1, n)
        ``w_1, ..., w_{T+1}``.
    true_erm : ndarray
        ``(1/m) sum (sigma(w_t.x_i) - y_i)^2`` per iterate.
    effective_erm : ndarray or None
        ``(1/m) sum (sigma(w_t.x_i) - sigma(w_ref.x_i))^2`` per iterate when
        a reference weight was given.
    w_norm_err : ndarray or None
        ``||w_t - w_ref||`` per iterate.
    step_decrease_checks : list of (float, float)
        ``(lhs, rhs)`` of the per-step decrease inequality, computed with
        the exact residual norm and the largest distance along the run.
    """

    iterates: np.ndarray
    true_erm: np.ndarray
    effective_erm: np.ndarray | None = None
    w_norm_err: np.ndarray | None = None
    step_decrease_checks: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def to_csv(self, path) -> None:
        """Write ``t,w_norm_err,effective_erm,true_erm`` rows (blank without a reference)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "w_norm_err", "effective_erm", "true_erm"])
            for t in range(len(self.true_erm)):
                ne = "" if self.w_norm_err is None else format_float(self.w_norm_err[t])
                ee = "" if self.effective_erm is None else format_float(self.effective_erm[t])
                w.writerow([t + 1, ne, ee, format_float(self.true_erm[t])])


def _check_ball(d: Dataset) -> None:
    r = d.max_norm()
    if r > 1.0 + 1e-12:
        raise HypothesisError("||x_i|| <= 1 for every sample", 1.0 - r)


def glm_tron_step(d: Dataset, activation: Activation, w) -> np.ndarray:
    """One GLM-Tron update."""
    w = as_vector(w, "w")
    resid = d.y - activation(d.X @ w)
    return w + resid @ d.X / d.size


def effective_erm(d: Dataset, activation: Activation, w, w_ref) -> float:
    """Mean squared gap between the current and reference predictors."""
    return float(np.mean((activation(d.X @ as_vector(w)) - activation(d.X @ as_vector(w_ref))) ** 2))


def true_erm(d: Dataset, activation: Activation, w) -> float:
    """Mean squared error against the labels."""
    return float(np.mean((activation(d.X @ as_vector(w)) - d.y) ** 2))


def iteration_count(w_ref_norm: float, epsilon: float) -> int:
    """Number of updates ``ceil(||w_ref|| / epsilon)``."""
    return max(1, math.ceil(w_ref_norm / epsilon))


def residual_norm(d: Dataset, activation: Activation, w_ref) -> float:
    """``||(1/m) sum (y_i - sigma(w_ref.x_i)) x_i||``, the smallest valid noise level."""
    resid = d.y - activation(d.X @ as_vector(w_ref))
    return float(np.linalg.norm(resid @ d.X / d.size))


def step_decrease_rhs(prev_sq: float, eff: float, L: float, noise_level: float, W: float) -> float:
    """Right side ``||w_t - w||^2 - (2/L - 1) eff + noise_level^2 + 2 noise_level W (L + 1)``."""
    return prev_sq - (2.0 / L - 1.0) * eff + noise_level**2 + 2.0 * noise_level * W * (L + 1.0)


def glm_tron_run(d: Dataset, cfg: GlmTronConfig, w_ref=None) -> GlmTronTrace:
    """Run GLM-Tron from zero.

    Parameters
    ----------
    d : Dataset
        Inputs must lie in the unit ball.
    cfg : GlmTronConfig
    w_ref : array_like, optional
        Reference weight. When given the run stops after
        ``min(max_iters, ceil(||w_ref|| / epsilon))`` updates and the trace
        carries the effective risk and per-step decrease checks.

    Returns
    -------
    GlmTronTrace
    """
    _check_ball(d)
    act = cfg.activation
    T = cfg.max_iters
    if w_ref is not None:
        w_ref = as_vector(w_ref, "w_ref")
        if w_ref.shape[0] != d.dim:
            raise DimensionError("w_ref length differs from the input dimension")
        T = min(T, iteration_count(float(np.linalg.norm(w_ref)), cfg.epsilon))
    iterates = np.zeros((T + 1, d.dim))
    for t in range(T):
        iterates[t + 1] = glm_tron_step(d, act, iterates[t])
    tr = GlmTronTrace(iterates, np.array([true_erm(d, act, w) for w in iterates]))
    if w_ref is not None:
        tr.effective_erm = np.array([effective_erm(d, act, w, w_ref) for w in iterates])
        tr.w_norm_err = np.linalg.norm(iterates - w_ref, axis=1)
        noise_level = residual_norm(d, act, w_ref)
        W = float(tr.w_norm_err.max())
        sq = tr.w_norm_err**2
        tr.step_decrease_checks = [
            (float(sq[t + 1]), step_decrease_rhs(sq[t], tr.effective_erm[t], act.lipschitz, noise_level, W)) for t in range(T)
        ]
    return tr


def check_step_decrease(trace: GlmTronTrace, d: Dataset, activation: Activation, w_ref, noise_level: float, W: float) -> list[bool]:
    """Check the per-step decrease of ``||w_t - w_ref||^2`` along a trace.

    Parameters
    ----------
    trace : GlmTronTrace
    d : Dataset
    activation : Activation
    w_ref : array_like
    noise_level : float
        Must bound the residual norm ``||(1/m) sum (y_i - sigma(w_ref.x_i)) x_i||``.
    W : float
        Must bound ``||w_t - w_ref||`` along the trace.

    Returns
    -------
    list of bool
        One flag per update.
    """
    w_ref = as_vector(w_ref, "w_ref")
    need = residual_norm(d, activation, w_ref)
    if noise_level < need * (1 - 1e-12):
        raise HypothesisError("noise_level >= residual norm at w_ref", noise_level - need)
    dist = np.linalg.norm(trace.iterates - w_ref, axis=1)
    if W < dist.max() * (1 - 1e-12):
        raise HypothesisError("W >= ||w_t - w_ref|| along the trace", W - dist.max())
    L = activation.lipschitz
    out = []
    for t in range(len(trace.iterates) - 1):
        eff = effective_erm(d, activation, trace.iterates[t], w_ref)
        rhs = step_decrease_rhs(dist[t] ** 2, eff, L, noise_level, W)
        out.append(bool(dist[t + 1] ** 2 <= rhs + 1e-12 * max(1.0, abs(rhs))))
    return out


def noiseless_bound(L: float, epsilon: float, theta: float, W: float) -> float:
    """Bound ``L/(2-L) (epsilon + theta^2 + 2 theta W (L+1))`` on the effective risk after the run."""
    return L / (2.0 - L) * (epsilon + theta**2 + 2.0 * theta * W * (L + 1.0))


def noise_risk_certificate(noise_second_moment: float, L: float, epsilon: float, theta: float, W: float) -> float:
    """Bound ``E[xi^2] + L/(2-L) (epsilon + theta^2 + 2 theta W (L+1))`` on the expected true risk.

    Parameters
    ----------
    noise_second_moment : float
        ``E[xi^2]`` of the label noise.
    L : float
        Lipschitz constant, ``0 < L < 2``.
    epsilon, theta, W : float
        Accuracy, noise bound and distance bound.

    Returns
    -------
    float
    """
    if not 0 < L < 2:
        raise HypothesisError("0 < L < 2", min(L, 2.0 - L))
    return noise_second_moment + noiseless_bound(L, epsilon, theta, W)
