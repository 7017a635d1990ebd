"""Envelope subgradients of the HGR indicators with respect to the second input.

The optimal coefficients are computed once and frozen; the returned vector
is the derivative of ``pearson(Pa @ alpha, P(b) @ beta)`` w.r.t. ``b``,
chain-ruled through standardization and the polynomial powers of ``b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from hgrkb.correlation import (
    DegreeConfig,
    HgrResult,
    SolverConfig,
    _as_degrees,
    _pair,
    hgr_kb,
    hgr_sk,
)
from hgrkb.kernelspace import expand, standardize


@dataclass
class GradientResult:
    gradient: np.ndarray
    value: float
    frozen_coefficients: tuple


def pearson_gradient(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """d pearson(u, v) / d v."""
    n = v.size
    uc, vc = u - u.mean(), v - v.mean()
    su, sv = np.sqrt(uc @ uc / n), np.sqrt(vc @ vc / n)
    r = (uc @ vc) / (n * su * sv)
    return (uc / (su * sv) - r * vc / sv**2) / n


def _through_standardize(b: np.ndarray, grad_z: np.ndarray) -> np.ndarray:
    # z = (b - mean) / std with population std
    z = standardize(b)
    n = b.size
    return (grad_z - grad_z.mean() - z * (z @ grad_z) / n) / b.std()


def _poly_derivative(z: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """d/dz of sum_j beta_j z**j, elementwise."""
    out = np.zeros_like(z)
    zp = np.ones_like(z)
    for j, c in enumerate(beta, start=1):
        out += j * c * zp
        zp = zp * z
    return out


def _kernel_side_gradient(u: np.ndarray, b: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. ``b`` of pearson(u, P(b) @ beta) where P is the standardized kernel of b."""
    Kb = expand(b, beta.size)
    v = Kb.centered @ beta
    gv = pearson_gradient(u, v)
    gz = gv * _poly_derivative(standardize(b), beta)
    return _through_standardize(b, gz)


def hgr_kb_subgradient(a, b, deg=DegreeConfig(), cfg: SolverConfig = SolverConfig(), result: Optional[HgrResult] = None) -> GradientResult:
    a, b = _pair(a, b)
    deg = _as_degrees(deg)
    res = result if result is not None else hgr_kb(a, b, deg, cfg)
    u = expand(a, deg.h).centered @ res.alpha
    grad = _kernel_side_gradient(u, b, res.beta)
    return GradientResult(gradient=grad, value=res.value, frozen_coefficients=(res.alpha, res.beta))


def hgr_sk_gradient(a, b, d: int = 5, cfg: SolverConfig = SolverConfig(), result: Optional[HgrResult] = None) -> GradientResult:
    a, b = _pair(a, b)
    res = result if result is not None else hgr_sk(a, b, d, cfg)
    if res.direction == "a_to_b":
        # kernel of a fitted onto b: b enters linearly
        u = expand(a, res.alpha.size).centered @ res.alpha
        grad = pearson_gradient(u, b)
    else:
        grad = _kernel_side_gradient(standardize(a), b, res.beta)
    return GradientResult(gradient=grad, value=res.value, frozen_coefficients=(res.alpha, res.beta))


def hinge_gradient(grad: GradientResult, tau: float) -> np.ndarray:
    """Gradient of max(0, value - tau); the active branch is taken at equality."""
    if grad.value < tau:
        return np.zeros_like(grad.gradient)
    return grad.gradient


def numeric_gradient(fn: Callable[[np.ndarray], float], b, step: float = 1e-6) -> np.ndarray:
    b = np.array(b, dtype=np.float64)
    out = np.empty_like(b)
    for i in range(b.size):
        orig = b[i]
        b[i] = orig + step
        hi = fn(b)
        b[i] = orig - step
        lo = fn(b)
        b[i] = orig
        out[i] = (hi - lo) / (2 * step)
    return out


def finite_diff_check(fn: Callable[[np.ndarray], float], analytic, b, step: float = 1e-6, floor: float = 1e-7) -> float:
    """Max entrywise relative error between central differences of ``fn`` and ``analytic``.

    ``analytic`` is the gradient vector (or a callable returning it at ``b``).
    Entries whose analytic magnitude is at most ``floor`` are skipped.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    b = np.asarray(b, dtype=np.float64)
    ana = np.asarray(analytic(b) if callable(analytic) else analytic, dtype=np.float64)
    num = numeric_gradient(fn, b, step)
    mask = np.abs(ana) > floor
    if not mask.any():
        return float(np.max(np.abs(num))) if np.max(np.abs(num)) > floor else 0.0
    return float(np.max(np.abs(num[mask] - ana[mask]) / np.abs(ana[mask])))
