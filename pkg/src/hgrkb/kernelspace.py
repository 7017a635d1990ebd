"""Polynomial kernel expansions of a single sample vector.

A kernel of degree ``d`` over a vector ``x`` is the ``n x d`` matrix whose
column ``j`` holds the elementwise power ``x**j`` (``j = 1..d``).  Every
solver works on the column-centered version of that matrix, so both are
kept together with the statistics needed to re-apply the same transform to
held-out points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hgrkb.errors import DimensionMismatch, InvalidDegree, ZeroVariance

MIN_SAMPLES = 3


@dataclass(frozen=True)
class SampleVector:
    """A validated one-dimensional sample: finite entries, ``n >= 3``, positive variance."""

    values: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if v.size < MIN_SAMPLES:
            raise DimensionMismatch(f"need at least {MIN_SAMPLES} observations, got {v.size}")
        _check_finite_and_spread(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def as_values(x) -> np.ndarray:
    """Return the float array behind ``x`` (a SampleVector or array-like), validated."""
    if isinstance(x, SampleVector):
        return x.values
    return SampleVector(x).values


def _check_finite_and_spread(v: np.ndarray) -> None:
    if not np.all(np.isfinite(v)):
        raise ValueError("sample contains NaN or infinite values")
    if v.size == 0 or np.ptp(v) == 0.0 or v.std() == 0.0:
        raise ZeroVariance("sample has zero variance")


@dataclass(frozen=True)
class KernelMatrix:
    raw: np.ndarray
    centered: np.ndarray
    column_means: np.ndarray
    degree: int
    source_std: float
    source_mean: float = 0.0
    standardized: bool = True
    _singular_values: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def singular_values(self) -> np.ndarray:
        if self._singular_values is None:
            object.__setattr__(self, "_singular_values", np.linalg.svd(self.centered, compute_uv=False))
        return self._singular_values

    @property
    def condition_number(self) -> float:
        """Ratio of largest to smallest singular value of the centered matrix."""
        s = self.singular_values
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")

    def transform(self, x) -> np.ndarray:
        """Centered kernel of new points using this kernel's scaling and column means."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if self.standardized:
            x = (x - self.source_mean) / self.source_std
        return _powers(x, self.degree) - self.column_means


def _powers(x: np.ndarray, d: int) -> np.ndarray:
    out = np.empty((x.size, d))
    col = x.copy()
    out[:, 0] = col
    for j in range(1, d):
        col = col * x
        out[:, j] = col
    return out


def standardize(x: np.ndarray) -> np.ndarray:
    """Zero mean, unit (population) variance."""
    return (x - x.mean()) / x.std()


def expand(x, d: int, standardize_input: bool = True) -> KernelMatrix:
    """Build the degree-``d`` polynomial kernel of ``x``.

    The input is standardized first unless ``standardize_input`` is False;
    the centered column space does not depend on that choice, but the
    dynamic range of ``x**d`` does.
    """
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidDegree(f"degree must be a positive integer, got {d!r}")
    d = int(d)
    v = x.values if isinstance(x, SampleVector) else np.asarray(x, dtype=np.float64).ravel()
    _check_finite_and_spread(v)
    mean, std = float(v.mean()), float(v.std())
    base = (v - mean) / std if standardize_input else v
    raw = _powers(base, d)
    means = raw.mean(axis=0)
    centered = raw - means
    for arr in (raw, centered, means):
        arr.flags.writeable = False
    return KernelMatrix(
        raw=raw,
        centered=centered,
        column_means=means,
        degree=d,
        source_std=std,
        source_mean=mean,
        standardized=standardize_input,
    )


def project(K: KernelMatrix, omega) -> np.ndarray:
    """Apply coefficient vector ``omega`` to the centered kernel."""
    omega = np.asarray(omega, dtype=np.float64).ravel()
    if omega.size != K.degree:
        raise DimensionMismatch(f"expected {K.degree} coefficients, got {omega.size}")
    return K.centered @ omega
