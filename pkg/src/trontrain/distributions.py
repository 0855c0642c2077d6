"""Input distributions and Monte Carlo estimates of moment constants.

The constants describe a ReLU teacher ``w_star`` under an input law ``D``:

* ``a_i = E[1{w_star.x > 0} ||x||^i]`` for ``i = 1..4``,
* ``beta_j = E[beta(x) 1{w_star.x > 0} ||x||^j]`` for ``j = 1..3``,
* ``lambda1(theta) = lambda_min(E[1{w_star.x > 2 theta} x x^T])``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError
from .linalg import as_vector, lambda_min_symmetric


@dataclass(frozen=True)
class UniformBox:
    """Uniform law on the box ``[low, high]`` (coordinatewise)."""

    low: tuple
    high: tuple

    def __post_init__(self):
        low, high = as_vector(self.low, "low"), as_vector(self.high, "high")
        if low.shape != high.shape or np.any(high <= low):
            raise ValueError("need low < high coordinatewise with equal lengths")
        object.__setattr__(self, "low", tuple(map(float, low)))
        object.__setattr__(self, "high", tuple(map(float, high)))

    @property
    def dim(self) -> int:
        return len(self.low)

    @property
    def radius(self) -> float:
        corner = np.maximum(np.abs(self.low), np.abs(self.high))
        return float(np.linalg.norm(corner))

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(count, self.dim))

    def to_dict(self) -> dict:
        return {"kind": "uniform_box", "low": list(self.low), "high": list(self.high)}


@dataclass(frozen=True)
class IsotropicGaussian:
    """Centered Gaussian ``N(0, sigma^2 I_n)``."""

    n: int
    sigma: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not self.sigma > 0:
            raise ValueError("need n >= 1 and sigma > 0")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def radius(self) -> float:
        return float("inf")

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.sigma * rng.standard_normal((count, self.n))

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "n": self.n, "sigma": self.sigma}


@dataclass(frozen=True)
class UnitBall:
    """Uniform law on the closed unit ball of ``R^n``."""

    n: int

    @property
    def dim(self) -> int:
        return self.n

    @property
    def radius(self) -> float:
        return 1.0

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        g = rng.standard_normal((count, self.n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * rng.uniform(size=(count, 1)) ** (1.0 / self.n)

    def to_dict(self) -> dict:
        return {"kind": "unit_ball", "n": self.n}


@dataclass(frozen=True)
class CustomDistribution:
    """Wraps a user sampler ``sampler(rng, count) -> (count, n)`` array."""

    sampler: Callable[[np.random.Generator, int], np.ndarray]
    n: int
    name: str = "custom"
    radius: float = float("inf")

    @property
    def dim(self) -> int:
        return self.n

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        X = np.asarray(self.sampler(rng, count), dtype=float)
        if X.shape != (count, self.n):
            raise DimensionError(f"sampler returned shape {X.shape}, expected {(count, self.n)}")
        return X

    def to_dict(self) -> dict:
        return {"kind": "custom", "name": self.name, "n": self.n}


def distribution_from_dict(spec: dict):
    """Build a distribution from its ``to_dict`` form."""
    kind = spec.get("kind")
    if kind == "uniform_box":
        return UniformBox(tuple(spec["low"]), tuple(spec["high"]))
    if kind == "gaussian":
        return IsotropicGaussian(int(spec["n"]), float(spec.get("sigma", 1.0)))
    if kind == "unit_ball":
        return UnitBall(int(spec["n"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(dist, seed, count: int) -> np.ndarray:
    """Draw ``count`` inputs, deterministic for an integer seed.

    Returns
    -------
    ndarray, shape (count, n)
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    return dist.draw(_generator(seed), count)


MOMENT_KEYS = ("a1", "a2", "a3", "a4", "beta1", "beta2", "beta3", "lambda1_theta", "theta_star", "n_samples")


@dataclass(frozen=True)
class MomentEstimates:
    """Moment constants of a teacher under an input law.

    ``std_err`` maps each estimated field to its Monte Carlo standard
    error (zero for analytic values). ``provenance`` records how the
    values were obtained.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    beta1: float
    beta2: float
    beta3: float
    lambda1_theta: float
    theta_star: float
    n_samples: int
    std_err: dict = field(default_factory=dict, compare=False)
    provenance: str = "monte_carlo"

    @property
    def a(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4)

    @property
    def beta(self) -> tuple:
        return (self.beta1, self.beta2, self.beta3)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in MOMENT_KEYS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "MomentEstimates":
        missing = set(MOMENT_KEYS) - set(d)
        if missing:
            raise ValueError(f"missing keys {sorted(missing)}")
        return cls(**{k: d[k] for k in MOMENT_KEYS})

    @classmethod
    def from_json(cls, text: str) -> "MomentEstimates":
        return cls.from_dict(json.loads(text))


def estimate_moments(
    dist,
    w_star,
    theta_star: float = 0.0,
    beta_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    mc_samples: int = 10**6,
    seed=0,
    chunk: int = 1 << 17,
) -> MomentEstimates:
    """Monte Carlo estimates of the moment constants.

    Parameters
    ----------
    dist : distribution
        Object with ``dim`` and ``draw(rng, count)``.
    w_star : array_like, shape (n,)
        Teacher weight.
    theta_star : float
        Corruption bound; the eigenvalue uses the event ``w_star.x > 2 theta_star``.
    beta_fn : callable, optional
        Attack probability ``beta(X) -> (m,)``; defaults to ``1``.
    mc_samples : int
        Number of samples.
    seed : int or Generator
        Same seed gives identical estimates.
    chunk : int
        Samples processed per block.

    Returns
    -------
    MomentEstimates
        Standard errors are in ``std_err``; the one for ``lambda1_theta``
        is that of the Rayleigh quotient at the estimated bottom
        eigenvector.
    """
    w_star = as_vector(w_star, "w_star")
    n = dist.dim
    if w_star.shape[0] != n:
        raise DimensionError(f"w_star has length {w_star.shape[0]}, distribution has dim {n}")
    if theta_star < 0:
        raise ValueError("theta_star must be non-negative")
    if mc_samples < 2:
        raise ValueError("need at least two samples")
    seed_seq = seed if isinstance(seed, np.random.Generator) else np.random.SeedSequence(seed)

    def blocks():
        rng = seed_seq if isinstance(seed_seq, np.random.Generator) else np.random.default_rng(seed_seq)
        left = mc_samples
        while left > 0:
            m = min(chunk, left)
            yield dist.draw(rng, m)
            left -= m

    s1 = np.zeros(7)
    s2 = np.zeros(7)
    mat = np.zeros((n, n))
    stored = [] if isinstance(seed_seq, np.random.Generator) else None
    for X in blocks():
        if stored is not None:
            stored.append(X)
        proj = X @ w_star
        ind = (proj > 0.0).astype(float)
        r = np.linalg.norm(X, axis=1)
        b = np.ones(len(X)) if beta_fn is None else np.asarray(beta_fn(X), dtype=float)
        vals = np.stack(
            [ind * r, ind * r**2, ind * r**3, ind * r**4, b * ind * r, b * ind * r**2, b * ind * r**3]
        )
        s1 += vals.sum(axis=1)
        s2 += (vals**2).sum(axis=1)
        ind2 = (proj > 2.0 * theta_star).astype(float)
        mat += (X * ind2[:, None]).T @ X
    N = float(mc_samples)
    means = s1 / N
    var = np.maximum(s2 / N - means**2, 0.0) * N / (N - 1.0)
    ses = np.sqrt(var / N)
    mat /= N
    lam = lambda_min_symmetric(mat)
    _, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    v = vecs[:, 0]
    q1 = q2 = 0.0
    for X in stored if stored is not None else blocks():
        ind2 = (X @ w_star > 2.0 * theta_star).astype(float)
        q = ind2 * (X @ v) ** 2
        q1 += q.sum()
        q2 += (q**2).sum()
    qvar = max(q2 / N - (q1 / N) ** 2, 0.0) * N / (N - 1.0)
    names = ("a1", "a2", "a3", "a4", "beta1", "beta2", "beta3")
    std_err = {k: float(s) for k, s in zip(names, ses)}
    std_err["lambda1_theta"] = float(np.sqrt(qvar / N))
    return MomentEstimates(
        *map(float, means),
        lambda1_theta=lam,
        theta_star=float(theta_star),
        n_samples=int(mc_samples),
        std_err=std_err,
    )


def example1_analytic(theta_star: float) -> tuple[float, float, float]:
    """Closed forms for ``Unif[-1,1]^2`` with teacher ``(-1, 1)``.

    With the event ``E = {x2 - x1 > 2 theta}`` and ``0 <= theta <= 1``,

    * ``d1 = E[1_E x1^2] = E[1_E x2^2] = (7 - 8 theta + (2 theta - 1)^4) / 48``,
    * ``d2 = E[1_E x1 x2] = -theta (theta - 1)^2 (theta + 2) / 6``,

    and the truncated second moment is ``[[d1, d2], [d2, d1]]`` with
    smallest eigenvalue ``d1 - |d2|``.

    Returns
    -------
    tuple of float
        ``(d1, d2, lambda1)``.
    """
    t = float(theta_star)
    if not 0.0 <= t <= 1.0:
        raise ValueError("closed form holds for 0 <= theta_star <= 1")
    d1 = (7.0 - 8.0 * t + (2.0 * t - 1.0) ** 4) / 48.0
    d2 = -t * (t - 1.0) ** 2 * (t + 2.0) / 6.0
    return d1, d2, d1 - abs(d2)
