"""Dense linear algebra helpers and the leaky ReLU activation."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import DimensionError, NonFiniteError


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Return ``v`` as a finite 1-d float array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d float array."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def leaky_relu(z, alpha: float = 0.0):
    """Leaky ReLU, ``z`` for ``z >= 0`` and ``alpha * z`` otherwise.

    Parameters
    ----------
    z : float or array_like
        Pre-activation values.
    alpha : float
        Negative-side slope, must lie in ``[0, 1)``.

    Returns
    -------
    float or ndarray
        Activation applied elementwise, same shape as ``z``.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 0.0, z, alpha * z)
    return out if out.ndim else float(out)


def relu(z):
    """Plain ReLU, ``max(z, 0)``."""
    return leaky_relu(z, 0.0)


def positive_indicator(z):
    """Strict indicator ``1{z > 0}`` as floats."""
    return (np.asarray(z, dtype=float) > 0.0).astype(float)


def lambda_min_symmetric(s) -> float:
    """Smallest eigenvalue of the symmetric part ``(S + S^T) / 2``.

    Parameters
    ----------
    s : array_like, shape (k, k)
        Square matrix, not necessarily symmetric.

    Returns
    -------
    float
        Smallest eigenvalue of the symmetrized matrix.
    """
    s = as_matrix(s, "s")
    if s.shape[0] != s.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {s.shape}")
    sym = 0.5 * (s + s.T)
    return float(linalg.eigvalsh(sym, subset_by_index=[0, 0])[0])


def spectral_norm(a) -> float:
    """Largest singular value of ``a``."""
    a = as_matrix(a, "a")
    if a.size == 0:
        return 0.0
    return float(linalg.svdvals(a)[0])
