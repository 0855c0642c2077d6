"""Labeled datasets, CSV round trips and symmetrization."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .errors import AsymmetryError, DimensionError, EmptyDatasetError, NonFiniteError


class LabeledSample(NamedTuple):
    """A single input and its label."""

    x: np.ndarray
    y: float


def format_float(v: float) -> str:
    """Render a float with 17 significant digits for lossless CSV output."""
    return f"{float(v):.17g}"


@dataclass(frozen=True)
class Dataset:
    """A multiset of labeled samples stored as arrays.

    Parameters
    ----------
    X : array_like, shape (S, n)
        Inputs, one row per sample. Duplicates are kept.
    y : array_like, shape (S,)
        Labels.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DimensionError(f"X must be 2-d, got shape {X.shape}")
        if X.shape[0] == 0:
            raise EmptyDatasetError("dataset must contain at least one sample")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"{X.shape[0]} inputs but {y.shape[0]} labels")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise NonFiniteError("dataset contains non-finite values")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        """Build from an iterable of ``(x, y)`` pairs."""
        samples = list(samples)
        if not samples:
            raise EmptyDatasetError("dataset must contain at least one sample")
        dims = {np.atleast_1d(np.asarray(x, dtype=float)).shape for x, _ in samples}
        if len(dims) != 1:
            raise DimensionError(f"samples have mixed input shapes {sorted(dims)}")
        X = np.stack([np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in samples])
        return cls(X, np.array([float(y) for _, y in samples]))

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, y in zip(self.X, self.y):
            yield LabeledSample(x, float(y))

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def max_norm(self) -> float:
        """Largest input norm ``max_i ||x_i||``."""
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    def second_moment(self) -> np.ndarray:
        """Empirical second moment ``(1/S) sum_i x_i x_i^T``."""
        return self.X.T @ self.X / self.size

    def to_csv(self, path) -> None:
        """Write a CSV with header ``x0..x{n-1},y``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.dim)] + ["y"])
            for x, y in zip(self.X, self.y):
                w.writerow([format_float(v) for v in x] + [format_float(y)])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        """Read a CSV written by :meth:`to_csv`."""
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise EmptyDatasetError(f"{path} is empty")
        header, body = rows[0], rows[1:]
        n = len(header) - 1
        if header != [f"x{i}" for i in range(n)] + ["y"]:
            raise ValueError(f"unexpected header {header}")
        arr = np.array([[float(v) for v in row] for row in body], dtype=float).reshape(-1, n + 1)
        return cls(arr[:, :n], arr[:, n])


def _key(x: np.ndarray) -> tuple:
    # +0.0 folds negative zero so that x and -x match on zero coordinates
    return tuple(float(v) + 0.0 for v in x)


def is_symmetric(d: Dataset) -> bool:
    """True when every input ``x`` appears exactly as often as ``-x``."""
    counts: dict[tuple, int] = defaultdict(int)
    for x in d.X:
        counts[_key(x)] += 1
    return all(counts.get(_key(-np.asarray(k)), 0) == c for k, c in counts.items())


def require_symmetric(d: Dataset) -> None:
    """Raise ``AsymmetryError`` unless ``d`` is closed under negation."""
    if not is_symmetric(d):
        raise AsymmetryError("input multiset is not closed under x -> -x")


def symmetrize(d: Dataset, label_rule: str | Callable[[np.ndarray, float], float] = "zero") -> Dataset:
    """Add mirrored inputs so the input multiset is closed under negation.

    Only unmatched occurrences get a mirror, so an already symmetric
    dataset is returned unchanged.

    Parameters
    ----------
    d : Dataset
    label_rule : {"zero", "copy"} or callable
        Label for a mirrored point ``-x``: ``0``, the label of ``x``, or
        ``label_rule(-x, y)``.

    Returns
    -------
    Dataset
    """
    if label_rule == "zero":
        rule = lambda x, y: 0.0  # noqa: E731
    elif label_rule == "copy":
        rule = lambda x, y: y  # noqa: E731
    elif callable(label_rule):
        rule = label_rule
    else:
        raise ValueError(f"unknown label rule {label_rule!r}")

    occurrences: dict[tuple, list[int]] = defaultdict(list)
    for i, x in enumerate(d.X):
        occurrences[_key(x)].append(i)
    extra_X, extra_y = [], []
    for key, idx in occurrences.items():
        mirror = _key(-np.asarray(key))
        if mirror == key:
            continue
        surplus = len(idx) - len(occurrences.get(mirror, []))
        for i in idx[len(idx) - surplus:] if surplus > 0 else []:
            extra_X.append(-d.X[i])
            extra_y.append(float(rule(-d.X[i], float(d.y[i]))))
    if not extra_X:
        return d
    return Dataset(np.vstack([d.X, np.array(extra_X)]), np.concatenate([d.y, extra_y]))
