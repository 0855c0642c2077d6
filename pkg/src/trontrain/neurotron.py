"""Neuro-Tron for shallow leaky-ReLU networks with shared weights.

A net class is a stack of patch matrices ``A_k`` (``r x n``) and a leaky
slope ``alpha``; the network is ``f_w(x) = (1/width) sum_k sigma(w . A_k x)``.
Training uses a fixed ``r x n`` matrix ``M``:

    g_t = M (1/S) sum_i (y_i - f_{w_t}(x_i)) x_i
    w_{t+1} = w_t + eta * g_t
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import recursion
from .data import Dataset, format_float, require_symmetric
from .errors import DimensionError, HypothesisError
from .linalg import as_matrix, as_vector, lambda_min_symmetric, leaky_relu, spectral_norm


@dataclass(frozen=True)
class NetClass:
    """Patch matrices ``patches[k]`` of shape ``(r, n)`` and leaky slope ``alpha``."""

    patches: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        P = np.asarray(self.patches, dtype=float)
        if P.ndim != 3 or P.shape[0] < 1:
            raise DimensionError(f"patches must have shape (width, r, n), got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ValueError("patches contain non-finite values")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        P.setflags(write=False)
        object.__setattr__(self, "patches", P)

    @property
    def width(self) -> int:
        return self.patches.shape[0]

    @property
    def r(self) -> int:
        return self.patches.shape[1]

    @property
    def n(self) -> int:
        return self.patches.shape[2]

    @property
    def mean_patch(self) -> np.ndarray:
        return self.patches.mean(axis=0)

    def patch_norms(self) -> np.ndarray:
        return np.array([spectral_norm(A) for A in self.patches])

    def to_dict(self) -> dict:
        return {"width": self.width, "alpha": self.alpha, "patches": self.patches.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "NetClass":
        nc = cls(np.asarray(d["patches"], dtype=float), float(d["alpha"]))
        if nc.width != int(d["width"]):
            raise ValueError("width does not match the number of patches")
        return nc

    @classmethod
    def from_json(cls, text: str) -> "NetClass":
        return cls.from_dict(json.loads(text))


def net_forward(nc: NetClass, w, x):
    """Network output for one input ``(n,)`` or a batch ``(S, n)``."""
    w = as_vector(w, "w")
    if w.shape[0] != nc.r:
        raise DimensionError(f"w has length {w.shape[0]}, net class expects {nc.r}")
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != nc.n:
        raise DimensionError(f"inputs have dim {X.shape[1]}, net class expects {nc.n}")
    # rows of U are A_k^T w, so pre-activations are X @ U^T
    U = np.einsum("krn,r->kn", nc.patches, w)
    out = leaky_relu(X @ U.T, nc.alpha).mean(axis=1)
    return float(out[0]) if single else out


def consistency_check(nc: NetClass, P, M) -> tuple[bool, float]:
    """Whether ``lambda_min(mean_patch @ P @ M^T) > 0``, with the eigenvalue."""
    P, M = as_matrix(P, "P"), as_matrix(M, "M")
    if P.shape != (nc.n, nc.n) or M.shape != (nc.r, nc.n):
        raise DimensionError("P must be (n, n) and M must be (r, n)")
    lam = lambda_min_symmetric(nc.mean_patch @ P @ M.T)
    return lam > 0.0, lam


def sample_net_class(M, C, k: int, alpha: float = 0.0) -> NetClass:
    """Net class with patches ``M + j C`` for ``j = -k..k, j != 0``; their mean is ``M``."""
    M, C = as_matrix(M, "M"), as_matrix(C, "C")
    if M.shape != C.shape:
        raise DimensionError("M and C shapes differ")
    if k < 1:
        raise ValueError("k must be positive")
    js = [j for j in range(-k, k + 1) if j != 0]
    return NetClass(np.stack([M + j * C for j in js]), alpha)


def sample_full_rank_M(r: int, n: int, dof: int, rng: np.random.Generator) -> np.ndarray:
    """``r x n`` matrix whose leading ``r x r`` block is a Wishart draw.

    The block is ``sum_{i=1}^{dof} g_i g_i^T`` with ``g_i ~ N(0, I_r)``; the
    remaining columns are zero. Requires ``dof >= r`` and ``n >= r``.
    """
    if n < r:
        raise DimensionError("need n >= r")
    if dof < r:
        raise ValueError("need dof >= r for a full-rank draw")
    g = rng.standard_normal((dof, r))
    M = np.zeros((r, n))
    M[:, :r] = g.T @ g
    return M


def residuals(d: Dataset, nc: NetClass, w) -> np.ndarray:
    return d.y - net_forward(nc, w, d.X)


def neurotron_direction(d: Dataset, nc: NetClass, M, w) -> np.ndarray:
    """Update direction ``M (1/S) sum_i (y_i - f_w(x_i)) x_i``."""
    return np.asarray(M) @ (residuals(d, nc, w) @ d.X) / d.size


def neurotron_step(d: Dataset, nc: NetClass, M, w, eta: float) -> np.ndarray:
    return as_vector(w) + eta * neurotron_direction(d, nc, M, w)


@dataclass
class NeuroTronTrace:
    """Iterates, update norms and sup-norm residuals of one run."""

    iterates: np.ndarray
    grad_norms: np.ndarray
    inf_norm_residuals: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def __len__(self) -> int:
        return self.iterates.shape[0]

    def to_csv(self, path) -> None:
        r = self.iterates.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"w{j}" for j in range(r)] + ["grad_norm", "inf_norm_residual"])
            for t in range(len(self)):
                w.writerow(
                    [t + 1]
                    + [format_float(v) for v in self.iterates[t]]
                    + [format_float(self.grad_norms[t]), format_float(self.inf_norm_residuals[t])]
                )


def neurotron_run(d: Dataset, nc: NetClass, M, eta: float, max_iters: int, w_init=None, tol: float = 1e-14) -> NeuroTronTrace:
    """Iterate the update from ``w_init`` (zero by default).

    Parameters
    ----------
    d : Dataset
    nc : NetClass
    M : array_like, shape (r, n)
    eta : float
        Step size.
    max_iters : int
        Largest number of recorded iterates.
    w_init : array_like, optional
    tol : float
        Stop once the update direction has norm below ``tol``.

    Returns
    -------
    NeuroTronTrace
        ``grad_norms[t]`` and ``inf_norm_residuals[t]`` are measured at
        iterate ``t``.
    """
    M = as_matrix(M, "M")
    if M.shape != (nc.r, nc.n) or d.dim != nc.n:
        raise DimensionError("M must be (r, n) and inputs must have dimension n")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    w = np.zeros(nc.r) if w_init is None else as_vector(w_init, "w_init").copy()
    # precompute per-patch projections: pre-activation of sample i, patch k is w . P[k, i]
    P = np.einsum("krn,sn->ksr", nc.patches, d.X)
    MX = d.X @ M.T / d.size
    its, gns, infs = [], [], []
    for _ in range(max_iters):
        f = leaky_relu(P @ w, nc.alpha).mean(axis=0)
        res = d.y - f
        g = res @ MX
        its.append(w.copy())
        gns.append(float(np.linalg.norm(g)))
        infs.append(float(np.max(np.abs(res))))
        if gns[-1] < tol or len(its) == max_iters:
            break
        w = w + eta * g
    return NeuroTronTrace(np.array(its), np.array(gns), np.array(infs))


def effective_risk(d: Dataset, nc: NetClass, w, w_t) -> float:
    """``(1/S) sum_i (f_w(x_i) - f_{w_t}(x_i))^2``."""
    return float(np.mean((net_forward(nc, w, d.X) - net_forward(nc, w_t, d.X)) ** 2))


def interpolation_error(d: Dataset, nc: NetClass, w) -> float:
    """``max_i |y_i - f_w(x_i)|``."""
    return float(np.max(np.abs(residuals(d, nc, w))))


def data_lambda1(d: Dataset, nc: NetClass, M) -> float:
    """``lambda_min`` of the symmetric part of ``mean_patch @ (X^T X / S) @ M^T``."""
    return lambda_min_symmetric(nc.mean_patch @ d.second_moment() @ np.asarray(M).T)


def symmetry_identity(d: Dataset, A, M, z1, z2, alpha: float) -> tuple[float, float]:
    """Both sides of the symmetric-data identity.

    Returns
    -------
    tuple of float
        ``sum_i sigma(A^T z1 . x_i) (M x_i . z2)`` and
        ``S (1 + alpha) / 2 * z1^T A (X^T X / S) M^T z2``.
    """
    require_symmetric(d)
    A, M = as_matrix(A, "A"), as_matrix(M, "M")
    z1, z2 = as_vector(z1), as_vector(z2)
    lhs = float(np.sum(leaky_relu(d.X @ (A.T @ z1), alpha) * (d.X @ M.T @ z2)))
    rhs = float(d.size * (1.0 + alpha) / 2.0 * z1 @ A @ d.second_moment() @ M.T @ z2)
    return lhs, rhs


def per_step_bound_check(trace: NeuroTronTrace, d: Dataset, nc: NetClass, M, w_ref, eta: float) -> list[tuple[float, float]]:
    """Both sides of the per-step inequality for every update of a trace.

    The left side is ``||w_{t+1} - w||^2 - ||w_t - w||^2``. The right side is
    ``2 eta b D - eta (1+alpha) lam D^2 + eta^2 (b^2 + b (1+alpha) B^2 D ||M|| abar + B^2 ||M||^2 Lt)``
    with ``D = ||w_t - w||``, ``b`` the residual norm at ``w``, ``lam`` the
    data eigenvalue, ``abar`` the mean patch norm and ``Lt`` the effective
    risk at step ``t``.

    Requires a symmetric input set.
    """
    require_symmetric(d)
    M = as_matrix(M, "M")
    w_ref = as_vector(w_ref, "w_ref")
    a = nc.alpha
    bres = float(np.linalg.norm(M @ (residuals(d, nc, w_ref) @ d.X) / d.size))
    lam = data_lambda1(d, nc, M)
    B = d.max_norm()
    Mn = spectral_norm(M)
    abar = float(nc.patch_norms().mean())
    out = []
    its = trace.iterates
    for t in range(len(its) - 1):
        D = float(np.linalg.norm(its[t] - w_ref))
        lhs = float(np.sum((its[t + 1] - w_ref) ** 2) - D**2)
        Lt = effective_risk(d, nc, w_ref, its[t])
        rhs = 2 * eta * bres * D - eta * (1 + a) * lam * D**2 + eta**2 * (
            bres**2 + bres * (1 + a) * B**2 * D * Mn * abar + B**2 * Mn**2 * Lt
        )
        out.append((lhs, float(rhs)))
    return out


@dataclass(frozen=True)
class NeuroTronSchedule:
    """Step size and horizon from the error recursion.

    ``a1 .. a5`` are the recursion constants
    ``D_{t+1} <= (1 - eta a1 + eta^2 a2) D_t + (eta^2 a3 + eta a4) sqrt(D_t) theta + eta^2 a5 theta^2``.
    """

    eta: float
    predicted_T: int
    alpha_rate: float
    floor: float
    gamma: float
    gamma_lower: float
    mu: float | None
    theta: float
    lambda1: float
    B: float
    M_norm: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float

    def to_dict(self) -> dict:
        return asdict(self)


def recursion_constants(nc: NetClass, M, B: float, lambda1: float) -> tuple[float, float, float, float, float]:
    """Constants ``a1 .. a5`` of the Neuro-Tron error recursion."""
    Mn = spectral_norm(as_matrix(M, "M"))
    norms = nc.patch_norms()
    al = nc.alpha
    a1 = (1 + al) * lambda1
    a2 = B**4 * Mn**2 * (1 + al) ** 2 * float(np.mean(norms**2))
    a3 = B**3 * Mn**2 * (1 + al) * float(np.mean(norms))
    a4 = 2.0 * B * Mn
    a5 = B**2 * Mn**2
    return a1, a2, a3, a4, a5


def mu_lower_bound(nc: NetClass, M, B: float, lambda1: float) -> float:
    """``sqrt(B ||M|| / ((1 + alpha) lambda1))``; the averaging weight must exceed it."""
    return math.sqrt(B * spectral_norm(as_matrix(M)) / ((1 + nc.alpha) * lambda1))


def theorem_schedule(
    nc: NetClass,
    M,
    B: float,
    lambda1: float,
    theta: float,
    w_err0: float,
    eps: float,
    mu: float | None = None,
    gamma: float | None = None,
) -> NeuroTronSchedule:
    """Step size and horizon guaranteeing ``||w_T - w||^2 <= eps^2``.

    Parameters
    ----------
    nc : NetClass
    M : array_like, shape (r, n)
    B : float
        Bound on the input norms.
    lambda1 : float
        Data eigenvalue, see :func:`data_lambda1`; must be positive.
    theta : float
        Interpolation error of the reference weight.
    w_err0 : float
        ``||w_1 - w||^2``.
    eps : float
        Target distance.
    mu : float, optional
        Averaging weight for ``theta > 0``; defaults to 1.5 times its lower bound.
    gamma : float, optional
        Step factor, ``eta = b1 / (gamma c1)``; defaults to twice its lower bound.

    Returns
    -------
    NeuroTronSchedule
    """
    if not lambda1 > 0:
        raise HypothesisError("lambda_min(mean_patch Sigma M^T) > 0", lambda1)
    if theta < 0 or not eps > 0 or not B > 0:
        raise ValueError("need theta >= 0, eps > 0 and B > 0")
    a1, a2, a3, a4, a5 = recursion_constants(nc, M, B, lambda1)
    Mn = spectral_norm(as_matrix(M))
    eps2 = eps**2
    if theta == 0:
        lower = max(1.0, a1**2 / a2)
        gamma = 2.0 * lower if gamma is None else float(gamma)
        if not gamma > lower:
            raise HypothesisError("gamma > max(1, a1^2/a2)", gamma - lower)
        rb = recursion.recurse_case1(a1, a2, gamma - 1.0, w_err0, eps2)
        return NeuroTronSchedule(rb.eta, rb.predicted_T, rb.alpha, 0.0, gamma, lower, None, 0.0, lambda1, B, Mn, a1, a2, a3, a4, a5)
    mu_low = mu_lower_bound(nc, M, B, lambda1)
    mu = 1.5 * mu_low if mu is None else float(mu)
    if not mu > mu_low:
        raise HypothesisError("mu > sqrt(B ||M|| / ((1 + alpha) lambda1))", mu - mu_low)
    b1 = a1 - a4 / (2 * mu**2)
    c1 = a2 + a3 / (2 * mu**2)
    c2 = theta**2 * (a3 * mu**2 / 2 + a5)
    c3 = a4 * theta**2 * mu**2 / 2
    if not eps2 > c3 / b1:
        raise HypothesisError(
            "eps^2 > theta^2 mu^2 / ((1 + alpha) lambda1 / (B ||M||) - 1/mu^2)", eps2 - c3 / b1
        )
    lower = recursion.lemma6_gamma_lower_bound(b1, c1, c2, c3, eps2)
    rb = recursion.recurse_lemma6(b1, c1, c2, c3, w_err0, eps2, gamma)
    return NeuroTronSchedule(rb.eta, rb.predicted_T, rb.alpha, rb.floor, rb.gamma, lower, mu, theta, lambda1, B, Mn, a1, a2, a3, a4, a5)


def surrogate_risk(d: Dataset, A1, w, alpha: float = 0.0) -> float:
    """Single-patch surrogate risk ``(1/S) sum_i [-y_i u_i + s(u_i)]`` with ``u_i = w . A1 x_i``.

    ``s(u)`` is the antiderivative of the activation: ``u^2/2`` for ``u > 0``
    and ``alpha u^2 / 2`` otherwise.
    """
    A1 = as_matrix(A1, "A1")
    u = d.X @ A1.T @ as_vector(w)
    s = np.where(u > 0, 0.5 * u**2, 0.5 * alpha * u**2)
    return float(np.mean(-d.y * u + s))


def surrogate_risk_grad(d: Dataset, A1, w, alpha: float = 0.0) -> np.ndarray:
    """Gradient of :func:`surrogate_risk`, equal to minus the single-patch update direction."""
    A1 = as_matrix(A1, "A1")
    u = d.X @ A1.T @ as_vector(w)
    return A1 @ ((leaky_relu(u, alpha) - d.y) @ d.X) / d.size
