"""Randomized Dependence Coefficient baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from hgrkb.correlation import _pair, canonical_correlation


@dataclass(frozen=True)
class RdcConfig:
    seed: int
    n_projections: int = 20
    scale: float = 1.0 / 6.0
    ridge: float = 1e-6

    def __post_init__(self):
        if self.n_projections < 1:
            raise ValueError("n_projections must be at least 1")
        if self.seed is None:
            raise ValueError("RDC needs an explicit seed")


def _copula(x: np.ndarray) -> np.ndarray:
    return rankdata(x, method="max") / x.size


def _features(u: np.ndarray, rng: np.random.Generator, cfg: RdcConfig) -> np.ndarray:
    X = np.column_stack([u, np.ones_like(u)])
    W = rng.standard_normal((2, cfg.n_projections)) * (cfg.scale / X.shape[1])
    F = np.sin(X @ W)
    return F - F.mean(axis=0)


def rdc(a, b, cfg: RdcConfig) -> float:
    """Largest canonical correlation between random sinusoidal features of the two rank copulas."""
    a, b = _pair(a, b)
    rng = np.random.default_rng(cfg.seed)
    Fa = _features(_copula(a), rng, cfg)
    Fb = _features(_copula(b), rng, cfg)
    rho, *_ = canonical_correlation(Fa, Fb, cfg.ridge)
    return float(np.clip(rho[0], 0.0, 1.0))
