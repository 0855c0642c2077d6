"""Step-size schedules and horizons for scalar error recursions.

Three recursions are covered, all of the form
``D[t+1] <= (1 - eta*b + eta**2 * c1) * D[t] + eta**2 * c2 + eta * c3``
with ``D[1] <= C``:

* ``case1``: ``c2 = c3 = 0``, step ``eta = b / ((1 + delta0) * c1)``.
* ``case2``: ``c3 = 0``, step chosen from the target ``eps2``.
* ``lemma6``: general ``c2, c3 >= 0`` with a free factor ``gamma``.

Each constructor checks its preconditions, returns the contraction
``alpha``, the additive term ``beta`` and the smallest horizon ``T`` for
which the worst-case sequence satisfies ``D[T] <= eps2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError

CERTIFY_ATOL = 1e-12


@dataclass(frozen=True)
class Hypothesis:
    """One checked precondition with its signed margin."""

    name: str
    holds: bool
    margin: float


@dataclass(frozen=True)
class RecursionBound:
    """Schedule and horizon for a scalar recursion.

    Attributes
    ----------
    lemma : str
        One of ``"case1"``, ``"case2"``, ``"lemma6"``.
    eta : float
        Prescribed step size.
    alpha : float
        Contraction factor ``1 - eta*b + eta**2 * c1``.
    beta : float
        Additive term ``eta**2 * c2 + eta * c3``.
    predicted_T : int
        Smallest ``T`` with worst-case ``D[T] <= eps2``.
    floor : float
        Fixed point ``beta / (1 - alpha)`` of the worst-case sequence.
    C, eps2 : float
        Initial bound and target.
    gamma : float or None
        Step factor for ``case2`` and ``lemma6``.
    hypotheses : tuple of Hypothesis
        Every checked precondition.
    """

    lemma: str
    eta: float
    alpha: float
    beta: float
    predicted_T: int
    floor: float
    C: float
    eps2: float
    gamma: float | None = None
    hypotheses: tuple = field(default_factory=tuple)


def _check(hyps: list[Hypothesis]) -> None:
    for h in hyps:
        if not h.holds:
            raise HypothesisError(h.name, h.margin)


def _hyp(name: str, lhs: float, rhs: float, strict: bool = True) -> Hypothesis:
    """Hypothesis ``lhs > rhs`` (or ``>=``) with margin ``lhs - rhs``."""
    margin = float(lhs - rhs)
    holds = margin > 0 if strict else margin >= 0
    if not math.isfinite(margin):
        holds = False
    return Hypothesis(name, bool(holds), margin)


def worst_case_value(alpha: float, beta: float, C: float, t: int) -> float:
    """Closed form of ``D[t]`` for ``D[1] = C``, ``D[s+1] = alpha*D[s] + beta``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if alpha == 1.0:
        return C + (t - 1) * beta
    f = beta / (1.0 - alpha)
    return f + alpha ** (t - 1) * (C - f)


def worst_case_horizon(alpha: float, beta: float, C: float, eps2: float) -> int:
    """Smallest ``T >= 1`` with worst-case ``D[T] <= eps2``.

    Parameters
    ----------
    alpha : float
        Contraction in ``[0, 1)``.
    beta : float
        Non-negative additive term.
    C : float
        Initial value ``D[1]``.
    eps2 : float
        Target value.

    Returns
    -------
    int
        The horizon. Raises ``HypothesisError`` when the target lies at or
        below the fixed point and ``C > eps2``.
    """
    if not 0.0 <= alpha < 1.0:
        raise HypothesisError("0 <= alpha < 1", min(alpha, 1.0 - alpha))
    if C <= eps2:
        return 1
    f = beta / (1.0 - alpha)
    if eps2 <= f:
        raise HypothesisError("target eps2 above the fixed point beta/(1-alpha)", eps2 - f)
    if alpha == 0.0:
        T = 2
    else:
        ratio = (eps2 - f) / (C - f)
        T = 1 + max(1, math.ceil(math.log(ratio) / math.log(alpha)))
    # guard against rounding in the logarithms
    while worst_case_value(alpha, beta, C, T) > eps2:
        T += 1
    while T > 2 and worst_case_value(alpha, beta, C, T - 1) <= eps2:
        T -= 1
    return T


def recurse_case1(b: float, c1: float, delta0: float, C: float, eps2: float) -> RecursionBound:
    """Schedule for the homogeneous recursion ``D[t+1] <= (1 - eta*b + eta**2*c1) D[t]``.

    Parameters
    ----------
    b, c1 : float
        Positive recursion coefficients.
    delta0 : float
        Positive slack, needs ``c1 > b**2 * delta0 / (1 + delta0)**2``.
    C : float
        Bound on the initial value.
    eps2 : float
        Target value.

    Returns
    -------
    RecursionBound
    """
    hyps = [
        _hyp("b > 0", b, 0.0),
        _hyp("c1 > 0", c1, 0.0),
        _hyp("delta0 > 0", delta0, 0.0),
        _hyp("C > 0", C, 0.0),
        _hyp("eps2 > 0", eps2, 0.0),
    ]
    _check(hyps)
    hyps.append(_hyp("c1 > b^2 delta0 / (1 + delta0)^2", c1, b**2 * delta0 / (1.0 + delta0) ** 2))
    _check(hyps)
    eta = b / ((1.0 + delta0) * c1)
    alpha = 1.0 - eta * b + eta**2 * c1
    T = worst_case_horizon(alpha, 0.0, C, eps2)
    return RecursionBound("case1", eta, alpha, 0.0, T, 0.0, C, eps2, None, tuple(hyps))


def recurse_case2(b: float, c1: float, c2: float, C: float, eps2: float) -> RecursionBound:
    """Schedule for ``D[t+1] <= (1 - eta*b + eta**2*c1) D[t] + eta**2*c2``.

    The step is ``eta = (b / c1) * eps2 / (1 + eps2)``, i.e. the general
    factor ``gamma = 1 + 1/eps2``. With ``c2 = c1`` the fixed point equals
    ``eps2`` so the target is only reached when ``C <= eps2``; that case
    fails the ``finite horizon`` hypothesis.

    Parameters
    ----------
    b, c1, c2 : float
        Coefficients with ``0 < c2 <= c1``.
    C : float
        Initial bound, must satisfy ``eps2 <= C``.
    eps2 : float
        Target value, also fixes the step size.

    Returns
    -------
    RecursionBound
    """
    hyps = [
        _hyp("b > 0", b, 0.0),
        _hyp("c1 > 0", c1, 0.0),
        _hyp("c2 > 0", c2, 0.0),
        _hyp("c2 <= c1", c1, c2, strict=False),
        _hyp("eps2 > 0", eps2, 0.0),
        _hyp("eps2 <= C", C, eps2, strict=False),
    ]
    _check(hyps)
    eps = math.sqrt(eps2)
    hyps.append(
        _hyp("b^2/c1 <= (sqrt(eps) + 1/sqrt(eps))^2", (math.sqrt(eps) + 1.0 / math.sqrt(eps)) ** 2, b**2 / c1, strict=False)
    )
    hyps.append(Hypothesis("finite horizon: c2 < c1 or eps2 = C", bool(c2 < c1 or eps2 >= C), (c1 - c2) if eps2 < C else 0.0))
    _check(hyps)
    gamma = 1.0 + 1.0 / eps2
    eta = b / (gamma * c1)
    alpha = 1.0 - (b**2 / c1) * eps2 / (1.0 + eps2) ** 2
    beta = eta**2 * c2
    floor = eps2 * c2 / c1
    T = worst_case_horizon(alpha, beta, C, eps2)
    return RecursionBound("case2", eta, alpha, beta, T, floor, C, eps2, gamma, tuple(hyps))


def lemma6_gamma_lower_bound(b1: float, c1: float, c2: float, c3: float, eps2: float) -> float:
    """Lower bound ``max(b1**2/c1, (eps2 + c2/c1) / (eps2 - c3/b1))`` on ``gamma``."""
    return max(b1**2 / c1, (eps2 + c2 / c1) / (eps2 - c3 / b1))


def recurse_lemma6(
    b1: float,
    c1: float,
    c2: float,
    c3: float,
    delta1: float,
    eps2: float,
    gamma: float | None = None,
) -> RecursionBound:
    """Schedule for ``D[t+1] <= (1 - eta*b1 + eta**2*c1) D[t] + eta**2*c2 + eta*c3``.

    Parameters
    ----------
    b1, c1 : float
        Positive coefficients.
    c2, c3 : float
        Non-negative additive coefficients.
    delta1 : float
        Initial value, must exceed ``eps2``.
    eps2 : float
        Target, must satisfy ``c3/b1 < eps2 < delta1``.
    gamma : float, optional
        Step factor, ``eta = b1 / (gamma * c1)``. Defaults to twice the
        lower bound.

    Returns
    -------
    RecursionBound
        ``floor`` is ``(c2/c1 + gamma*c3/b1) / (gamma - 1)``.
    """
    hyps = [
        _hyp("b1 > 0", b1, 0.0),
        _hyp("c1 > 0", c1, 0.0),
        _hyp("c2 >= 0", c2, 0.0, strict=False),
        _hyp("c3 >= 0", c3, 0.0, strict=False),
        _hyp("eps2 > c3/b1", eps2, c3 / b1 if b1 > 0 else np.inf),
        _hyp("eps2 < delta1", delta1, eps2),
    ]
    _check(hyps)
    lower = lemma6_gamma_lower_bound(b1, c1, c2, c3, eps2)
    if gamma is None:
        gamma = 2.0 * lower
    hyps.append(_hyp("gamma > max(b1^2/c1, (eps2 + c2/c1)/(eps2 - c3/b1))", gamma, lower))
    hyps.append(_hyp("gamma > 1", gamma, 1.0))
    _check(hyps)
    eta = b1 / (gamma * c1)
    alpha = 1.0 - (b1**2 / c1) * (1.0 / gamma - 1.0 / gamma**2)
    beta = eta**2 * c2 + eta * c3
    floor = (c2 / c1 + gamma * c3 / b1) / (gamma - 1.0)
    T = worst_case_horizon(alpha, beta, delta1, eps2)
    return RecursionBound("lemma6", eta, alpha, beta, T, floor, delta1, eps2, float(gamma), tuple(hyps))


@dataclass(frozen=True)
class Unrolled:
    """Worst-case sequence ``D[1..T]`` and whether it meets the target."""

    sequence: np.ndarray
    certified: bool


def unroll_worst_case(alpha: float, beta: float, C: float, T: int, eps2: float | None = None) -> Unrolled:
    """Iterate ``D[t+1] = alpha*D[t] + beta`` from ``D[1] = C`` up to ``D[T]``.

    Parameters
    ----------
    alpha, beta : float
        Recursion coefficients, taken at equality.
    C : float
        Initial value.
    T : int
        Horizon, the returned sequence has length ``T``.
    eps2 : float, optional
        Target; ``certified`` is ``D[T] <= eps2`` up to ``1e-12`` times
        ``max(1, C)``. Without a target ``certified`` is False.

    Returns
    -------
    Unrolled
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    seq = np.empty(T)
    seq[0] = C
    for t in range(1, T):
        seq[t] = alpha * seq[t - 1] + beta
    certified = False
    if eps2 is not None:
        certified = bool(seq[-1] <= eps2 + CERTIFY_ATOL * max(1.0, C))
    return Unrolled(seq, certified)


def certify(bound: RecursionBound) -> bool:
    """Unroll a bound's worst-case sequence and check the target at ``predicted_T``."""
    return unroll_worst_case(bound.alpha, bound.beta, bound.C, bound.predicted_T, bound.eps2).certified


LEMMAS = {"recurse1": "case1", "recurse2": "case2", "recurse2lemma6": "lemma6"}


def draw_valid_params(lemma: str, rng: np.random.Generator) -> dict:
    """Draw random parameters satisfying every precondition of ``lemma``.

    Parameters
    ----------
    lemma : {"case1", "case2", "lemma6"}
    rng : numpy.random.Generator

    Returns
    -------
    dict
        Keyword arguments for the matching ``recurse_*`` function.
    """
    if lemma == "case1":
        b = rng.uniform(0.1, 5.0)
        delta0 = np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
        c1 = b**2 * delta0 / (1.0 + delta0) ** 2 * (1.0 + np.exp(rng.uniform(np.log(1e-2), np.log(10.0))))
        C = np.exp(rng.uniform(np.log(0.1), np.log(100.0)))
        eps2 = C * np.exp(rng.uniform(np.log(1e-8), np.log(0.9)))
        return dict(b=b, c1=c1, delta0=delta0, C=C, eps2=eps2)
    if lemma == "case2":
        C = np.exp(rng.uniform(np.log(0.1), np.log(100.0)))
        eps2 = min(C, np.exp(rng.uniform(np.log(1e-4), np.log(4.0)))) * rng.uniform(0.1, 1.0)
        c1 = np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
        c2 = c1 * rng.uniform(0.01, 0.99)
        eps = np.sqrt(eps2)
        cap = (np.sqrt(eps) + 1.0 / np.sqrt(eps)) ** 2
        b = np.sqrt(cap * c1 * rng.uniform(0.01, 1.0))
        return dict(b=b, c1=c1, c2=c2, C=C, eps2=eps2)
    if lemma == "lemma6":
        b1 = rng.uniform(0.1, 5.0)
        c1 = np.exp(rng.uniform(np.log(0.1), np.log(10.0)))
        c2 = np.exp(rng.uniform(np.log(1e-4), np.log(1.0)))
        c3 = np.exp(rng.uniform(np.log(1e-4), np.log(1.0)))
        low = c3 / b1
        delta1 = low * np.exp(rng.uniform(np.log(2.0), np.log(1e4)))
        eps2 = low + (delta1 - low) * rng.uniform(0.01, 0.99)
        gamma = lemma6_gamma_lower_bound(b1, c1, c2, c3, eps2) * (1.0 + np.exp(rng.uniform(np.log(1e-2), np.log(10.0))))
        return dict(b1=b1, c1=c1, c2=c2, c3=c3, delta1=delta1, eps2=eps2, gamma=gamma)
    raise ValueError(f"unknown lemma {lemma!r}")


def build(lemma: str, params: dict) -> RecursionBound:
    """Dispatch ``params`` to the constructor for ``lemma``."""
    fn = {"case1": recurse_case1, "case2": recurse_case2, "lemma6": recurse_lemma6}[lemma]
    return fn(**params)


def verify_draws(lemma: str, draws: int, seed: int) -> dict:
    """Certify ``draws`` random valid instances of a recursion by unrolling.

    Returns
    -------
    dict
        ``lemma``, ``draws``, ``certified`` count, ``max_floor_error`` (for
        ``lemma6``, the largest gap between the iterated fixed point and the
        closed-form floor) and ``max_T``.
    """
    lemma = LEMMAS.get(lemma, lemma)
    rng = np.random.default_rng(seed)
    certified = 0
    max_floor_err = 0.0
    max_T = 0
    for _ in range(draws):
        bound = build(lemma, draw_valid_params(lemma, rng))
        certified += certify(bound)
        max_T = max(max_T, bound.predicted_T)
        if bound.alpha < 1.0:
            fixed = bound.beta / (1.0 - bound.alpha)
            max_floor_err = max(max_floor_err, abs(fixed - bound.floor) / max(1.0, abs(bound.floor)))
    return dict(lemma=lemma, draws=draws, certified=int(certified), max_floor_error=float(max_floor_err), max_T=int(max_T))
