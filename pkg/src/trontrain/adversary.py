"""Label oracle for a ReLU teacher with probabilistic bounded corruption.

For an input ``x`` the oracle returns ``y = attacked * xi + relu(w_star.x)``
where ``attacked ~ Bernoulli(beta(x))`` and ``|xi| <= theta_star``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DimensionError, SupportRadiusError
from .linalg import as_vector, relu


@dataclass(frozen=True)
class ConstantBeta:
    """Attack probability ``p`` everywhere."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.full(X.shape[0], float(self.p))

    @property
    def sup(self) -> float:
        return float(self.p)

    def to_dict(self) -> dict:
        return {"kind": "constant", "p": self.p}


@dataclass(frozen=True)
class HalfspaceBeta:
    """Attack probability ``p`` on the half space ``v.x > 0`` and 0 elsewhere."""

    v: tuple
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        object.__setattr__(self, "v", tuple(map(float, as_vector(self.v, "v"))))

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.p * (X @ np.asarray(self.v) > 0.0)

    @property
    def sup(self) -> float:
        return float(self.p)

    def to_dict(self) -> dict:
        return {"kind": "indicator_halfspace", "v": list(self.v), "p": self.p}


def beta_from_dict(spec: dict):
    """Rebuild a built-in attack probability from its dictionary form."""
    kind = spec.get("kind")
    if kind == "constant":
        return ConstantBeta(float(spec["p"]))
    if kind == "indicator_halfspace":
        return HalfspaceBeta(tuple(spec["v"]), float(spec["p"]))
    raise ValueError(f"unknown beta kind {kind!r}; only built-ins serialize")


@dataclass(frozen=True)
class Realization:
    """Perturbation that makes labels equal ``relu(w_adv.x)`` exactly."""

    w_adv: tuple

    def __post_init__(self):
        object.__setattr__(self, "w_adv", tuple(map(float, as_vector(self.w_adv, "w_adv"))))


Perturbation = Union[str, Realization]
PERTURBATIONS = ("uniform", "signed_max")


@dataclass(frozen=True)
class OracleConfig:
    """Corruption model for label queries.

    Parameters
    ----------
    w_star : array_like
        Teacher weight.
    theta_star : float
        Bound on the perturbation magnitude.
    beta_fn : callable
        Attack probability, maps ``(m, n)`` inputs to ``(m,)`` values in ``[0, 1]``.
    perturbation : {"uniform", "signed_max"} or Realization
        How ``xi`` is drawn once the coin says attack. ``"uniform"`` draws
        ``Unif[-theta_star, theta_star]`` and is the default; the corruption
        model itself only bounds ``|xi|``.
    """

    w_star: tuple
    theta_star: float
    beta_fn: Callable = field(default_factory=lambda: ConstantBeta(1.0))
    perturbation: Perturbation = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "w_star", tuple(map(float, as_vector(self.w_star, "w_star"))))
        if not (np.isfinite(self.theta_star) and self.theta_star >= 0):
            raise ValueError("theta_star must be finite and non-negative")
        if isinstance(self.perturbation, str) and self.perturbation not in PERTURBATIONS:
            raise ValueError(f"unknown perturbation {self.perturbation!r}")
        if isinstance(self.perturbation, Realization) and len(self.perturbation.w_adv) != len(self.w_star):
            raise DimensionError("w_adv and w_star lengths differ")

    @property
    def dim(self) -> int:
        return len(self.w_star)

    @property
    def sup_beta(self) -> float:
        return float(getattr(self.beta_fn, "sup", 1.0))

    def to_dict(self) -> dict:
        if not hasattr(self.beta_fn, "to_dict"):
            raise ValueError("only built-in attack probabilities serialize")
        if isinstance(self.perturbation, Realization):
            pert = {"kind": "realization", "w_adv": list(self.perturbation.w_adv)}
        else:
            pert = {"kind": self.perturbation}
        return {
            "w_star": list(self.w_star),
            "theta_star": self.theta_star,
            "beta": self.beta_fn.to_dict(),
            "perturbation": pert,
            "perturbation_is_library_default": self.perturbation == "uniform",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "OracleConfig":
        pert = d.get("perturbation", {"kind": "uniform"})
        if isinstance(pert, str):
            pert = {"kind": pert}
        perturbation = Realization(tuple(pert["w_adv"])) if pert["kind"] == "realization" else pert["kind"]
        beta = beta_from_dict(d.get("beta", {"kind": "constant", "p": 1.0}))
        return cls(tuple(d["w_star"]), float(d["theta_star"]), beta, perturbation)

    @classmethod
    def from_json(cls, text: str) -> "OracleConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class OracleReply:
    """Label for one query; ``xi`` is 0 when not attacked."""

    y: float
    attacked: bool
    xi: float


@dataclass(frozen=True)
class OracleBatch:
    """Labels for a batch of queries.

    ``xi_raw`` holds the perturbation drawn for every query before the coin
    gates it, ``xi`` the one actually applied.
    """

    y: np.ndarray
    attacked: np.ndarray
    xi: np.ndarray
    xi_raw: np.ndarray


def respond(cfg: OracleConfig, X, rng: np.random.Generator) -> OracleBatch:
    """Answer a batch of queries.

    Draw order per call is fixed: coins first, then perturbations.

    Parameters
    ----------
    cfg : OracleConfig
    X : array_like, shape (m, n)
    rng : numpy.random.Generator

    Returns
    -------
    OracleBatch
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != cfg.dim:
        raise DimensionError(f"inputs have dim {X.shape[1]}, teacher has {cfg.dim}")
    clean = relu(X @ np.asarray(cfg.w_star))
    clean = np.atleast_1d(clean)
    m = X.shape[0]
    if isinstance(cfg.perturbation, Realization):
        xi = np.atleast_1d(relu(X @ np.asarray(cfg.perturbation.w_adv))) - clean
        limit = cfg.theta_star * (1.0 + 1e-12) + 1e-15
        if np.any(np.abs(xi) > limit):
            raise SupportRadiusError(
                f"realization perturbation {np.max(np.abs(xi)):.6g} exceeds theta_star {cfg.theta_star:.6g}; "
                "input lies outside the declared support radius"
            )
        attacked = np.ones(m, dtype=bool)
        return OracleBatch(clean + xi, attacked, xi, xi)
    p = np.asarray(cfg.beta_fn(X), dtype=float).reshape(-1)
    if p.shape[0] != m or np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("beta_fn must return one probability in [0, 1] per input")
    attacked = rng.uniform(size=m) < p
    if cfg.perturbation == "uniform":
        xi_raw = rng.uniform(-cfg.theta_star, cfg.theta_star, size=m)
    else:
        xi_raw = cfg.theta_star * np.where(rng.uniform(size=m) < 0.5, -1.0, 1.0)
    xi = np.where(attacked, xi_raw, 0.0)
    return OracleBatch(clean + xi, attacked, xi, xi_raw)


def query(cfg: OracleConfig, x, rng: np.random.Generator) -> OracleReply:
    """Answer a single query ``x``."""
    x = as_vector(x, "x")
    b = respond(cfg, x[None, :], rng)
    return OracleReply(float(b.y[0]), bool(b.attacked[0]), float(b.xi[0]))


def make_realization_attack(w_star, w_adv, r: float) -> OracleConfig:
    """Oracle whose labels are exactly ``relu(w_adv.x)`` on the ball of radius ``r``.

    The perturbation ``relu(w_adv.x) - relu(w_star.x)`` is bounded by
    ``r * ||w_adv - w_star||`` since ReLU is 1-Lipschitz, so the returned
    config uses that bound as ``theta_star`` and attacks every query.

    Parameters
    ----------
    w_star, w_adv : array_like
        Teacher and adversarial weights of equal length.
    r : float
        Support radius of the inputs.

    Returns
    -------
    OracleConfig
    """
    w_star = as_vector(w_star, "w_star")
    w_adv = as_vector(w_adv, "w_adv")
    if w_star.shape != w_adv.shape:
        raise DimensionError("w_star and w_adv lengths differ")
    if not r > 0:
        raise ValueError("r must be positive")
    theta = float(r * np.linalg.norm(w_adv - w_star))
    return OracleConfig(tuple(w_star), theta, ConstantBeta(1.0), Realization(tuple(w_adv)))
