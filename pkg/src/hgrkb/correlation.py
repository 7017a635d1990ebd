"""Pearson, HGR-KB and HGR-SK estimators.

HGR-KB restricted to polynomial kernels of degrees ``(h, k)`` is exactly the
first canonical correlation between the two centered kernel matrices, so the
default solver whitens each side and reads the answer off the leading
singular triple of the whitened cross-covariance.  A projected-gradient
solver over the constrained least-squares form is kept as ``method="refine"``
and serves as an independent cross-check (and as the slow path for timing).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from hgrkb.errors import InvalidDegree, LengthMismatch, RankDeficient
from hgrkb.kernelspace import KernelMatrix, as_values, expand, standardize

DIRECTIONS = ("both", "a_to_b", "b_to_a")
# singular values closer than this to the leading one are treated as ties
TIE_TOL = 1e-12
RANK_TOL = 1e-9


@dataclass(frozen=True)
class DegreeConfig:
    h: int = 5
    k: int = 5

    def __post_init__(self):
        for name in ("h", "k"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise InvalidDegree(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    ``ridge`` is relative: each covariance gets ``ridge * trace / d`` added to
    its diagonal.  ``tol``, ``max_iter``, ``seed`` and ``warm_start`` only
    affect the ``refine`` path; the eigen path is direct.
    """

    ridge: float = 1e-9
    tol: float = 1e-8
    max_iter: int = 500
    warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None
    method: str = "eigen"
    seed: int = 0

    def __post_init__(self):
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.method not in ("eigen", "refine"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class HgrResult:
    value: float
    alpha: np.ndarray
    beta: np.ndarray
    direction: str = "both"
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "direction": self.direction,
            "diagnostics": self.diagnostics,
        }


def _pair(a, b) -> Tuple[np.ndarray, np.ndarray]:
    a, b = as_values(a), as_values(b)
    if a.size != b.size:
        raise LengthMismatch(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    xc, yc = x - x.mean(), y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        return 0.0
    return float(np.dot(xc, yc) / denom)


def pearson(a, b) -> float:
    """Sample Pearson correlation."""
    a, b = _pair(a, b)
    return float(np.clip(_corr(a, b), -1.0, 1.0))


def pearson_lstsq(a, b) -> float:
    """Pearson correlation obtained as the least-squares slope between standardized vectors."""
    a, b = _pair(a, b)
    za, zb = standardize(a), standardize(b)
    r, *_ = np.linalg.lstsq(za[:, None], zb, rcond=None)
    return float(r[0])


# ---------------------------------------------------------------------------
# canonical correlation core (shared with the RDC baseline)
# ---------------------------------------------------------------------------

def _whitener(P: np.ndarray, ridge: float):
    """Symmetric inverse square root of the ridge-stabilized covariance of ``P``.

    Returns ``(W, scaled_U, cond, rank_deficient)`` where ``P @ W == scaled_U @ V.T``.
    """
    n, d = P.shape
    U, s, Vt = np.linalg.svd(P, full_matrices=False)
    eig = s**2 / n
    eig_r = eig + ridge * eig.sum() / d
    inv_sqrt = 1.0 / np.sqrt(eig_r)
    W = (Vt.T * inv_sqrt) @ Vt
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    deficient = bool(s[-1] <= RANK_TOL * s[0])
    return W, U * (s * inv_sqrt), Vt, cond, deficient


def canonical_correlation(X: np.ndarray, Y: np.ndarray, ridge: float = 1e-9):
    """All canonical pairs of the column-centered matrices ``X`` and ``Y``.

    Returns ``(rho, A, B, info)`` with ``rho`` sorted descending and the columns
    of ``A`` / ``B`` the matching coefficient vectors.
    """
    n = X.shape[0]
    if ridge == 0 and (X.shape[1] > n or Y.shape[1] > n):
        raise ValueError("more columns than rows needs a positive ridge")
    Wx, Ux, Vxt, cond_x, def_x = _whitener(X, ridge)
    Wy, Uy, Vyt, cond_y, def_y = _whitener(Y, ridge)
    # whitened cross-covariance Wx Cxy Wy, built from the thin factors
    T = Vxt.T @ (Ux.T @ Uy) @ Vyt / n
    u, rho, vt = np.linalg.svd(T, full_matrices=False)
    A = Wx @ u
    B = Wy @ vt.T
    info = {"condition_numbers": [cond_x, cond_y], "rank_deficient": def_x or def_y}
    return rho, A, B, info


def _canonical_sign(alpha: np.ndarray, beta: np.ndarray):
    nz = np.flatnonzero(np.abs(alpha) > 1e-14 * max(1.0, np.abs(alpha).max()))
    if nz.size and alpha[nz[0]] < 0:
        return -alpha, -beta
    return alpha, beta


def _unit_projection(P: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    f = P @ w
    sd = f.std()
    if sd == 0.0:
        return w, f
    return w / sd, f / sd


def _finish(Pa, Pb, alpha, beta, diagnostics, direction="both", sign_fix=True) -> HgrResult:
    alpha, f = _unit_projection(Pa, alpha)
    beta, g = _unit_projection(Pb, beta)
    r = _corr(f, g)
    if r < 0:
        alpha, f, r = -alpha, -f, -r
    if sign_fix:
        alpha, beta = _canonical_sign(alpha, beta)
    value = float(np.clip(r, 0.0, 1.0))
    diagnostics.setdefault("final_residual", float(np.mean((value * f - g) ** 2)) if f.std() > 0 else 1.0)
    return HgrResult(value=value, alpha=alpha, beta=beta, direction=direction, diagnostics=diagnostics)


def _check_sizes(n: int, *degrees: int):
    for d in degrees:
        if n <= d:
            raise InvalidDegree(f"need more observations ({n}) than coefficients ({d})")


def _as_degrees(deg) -> DegreeConfig:
    if isinstance(deg, DegreeConfig):
        return deg
    h, k = deg
    return DegreeConfig(h, k)


def hgr_kb(a, b, deg=DegreeConfig(), cfg: SolverConfig = SolverConfig()) -> HgrResult:
    """Kernel-based HGR: max Pearson correlation between degree-h and degree-k polynomials of a and b."""
    a, b = _pair(a, b)
    deg = _as_degrees(deg)
    _check_sizes(a.size, deg.h, deg.k)
    Ka, Kb = expand(a, deg.h), expand(b, deg.k)
    if cfg.method == "refine":
        return refine_kb(Ka, Kb, cfg)
    return _kb_eigen(Ka, Kb, cfg)


def _kb_eigen(Ka: KernelMatrix, Kb: KernelMatrix, cfg: SolverConfig) -> HgrResult:
    Pa, Pb = Ka.centered, Kb.centered
    rho, A, B, info = canonical_correlation(Pa, Pb, cfg.ridge)
    tied = np.flatnonzero(rho >= rho[0] - TIE_TOL)
    best = None
    for i in tied:
        alpha, _ = _unit_projection(Pa, A[:, i])
        beta, _ = _unit_projection(Pb, B[:, i])
        alpha, beta = _canonical_sign(alpha, beta)
        if best is None or tuple(alpha) > tuple(best[0]):
            best = (alpha, beta)
    if info["rank_deficient"]:
        warnings.warn("kernel basis is numerically rank deficient; ridge applied", RankDeficient, stacklevel=3)
    diagnostics = {
        "method": "eigen",
        "iterations": 0,
        "condition_numbers": info["condition_numbers"],
        "rank_deficient": info["rank_deficient"],
        "canonical_correlations": rho.tolist(),
    }
    return _finish(Pa, Pb, best[0], best[1], diagnostics)


def refine_kb(Ka: KernelMatrix, Kb: KernelMatrix, cfg: SolverConfig = SolverConfig(method="refine")) -> HgrResult:
    """Projected gradient on ``min ||Pa a - Pb b||^2 / n  s.t.  var(Pb b) = 1``.

    A local method: starts from ``cfg.warm_start`` when given, otherwise from
    a standard normal draw seeded by ``cfg.seed``.
    """
    Pa0, Pb0 = Ka.centered, Kb.centered
    n = Pa0.shape[0]
    # Jacobi preconditioning: iterate on unit-variance columns
    sa, sb = Pa0.std(axis=0), Pb0.std(axis=0)
    sa[sa == 0] = 1.0
    sb[sb == 0] = 1.0
    Pa, Pb = Pa0 / sa, Pb0 / sb
    if cfg.warm_start is not None:
        alpha = np.array(cfg.warm_start[0], dtype=np.float64) * sa
        beta = np.array(cfg.warm_start[1], dtype=np.float64) * sb
    else:
        rng = np.random.default_rng(cfg.seed)
        alpha = rng.standard_normal(Pa.shape[1])
        beta = rng.standard_normal(Pb.shape[1])
    if beta.size != Pb.shape[1] or alpha.size != Pa.shape[1]:
        raise ValueError("warm start does not match kernel degrees")
    g = Pb @ beta
    if g.std() == 0.0:
        beta = np.ones_like(beta)
        g = Pb @ beta
    beta /= g.std()
    # optimal length of alpha along its starting direction
    f = Pa @ alpha
    if f @ f > 0:
        alpha = alpha * ((f @ (Pb @ beta)) / (f @ f))
    # Lipschitz bound of the joint gradient
    lip = 2.0 * (np.linalg.norm(Pa, 2) ** 2 + np.linalg.norm(Pb, 2) ** 2) / n
    step = 1.0 / lip
    resid = Pa @ alpha - Pb @ beta
    obj = resid @ resid / n
    it = 0
    for it in range(1, cfg.max_iter + 1):
        ga = 2.0 * (Pa.T @ resid) / n
        gb = -2.0 * (Pb.T @ resid) / n
        # drop the component along the constraint normal Cbb @ beta
        normal = Pb.T @ (Pb @ beta) / n
        gb = gb - (normal @ gb) / (normal @ normal) * normal
        alpha = alpha - step * ga
        beta = beta - step * gb
        beta /= (Pb @ beta).std()
        resid = Pa @ alpha - Pb @ beta
        new_obj = resid @ resid / n
        done = abs(obj - new_obj) <= cfg.tol * max(1.0, new_obj)
        obj = new_obj
        if done:
            break
    diagnostics = {
        "method": "refine",
        "iterations": it,
        "objective": float(obj),
        "condition_numbers": [Ka.condition_number, Kb.condition_number],
        "rank_deficient": False,
    }
    if np.std(Pa @ alpha) == 0.0:
        alpha = np.ones_like(alpha)
    return _finish(Pa0, Pb0, alpha / sa, beta / sb, diagnostics)


def multistart_kb(a, b, deg, restarts: int = 64, cfg: SolverConfig = SolverConfig(method="refine", max_iter=2000)) -> HgrResult:
    """Best of ``restarts`` seeded projected-gradient runs (the cross-check oracle)."""
    a, b = _pair(a, b)
    deg = _as_degrees(deg)
    _check_sizes(a.size, deg.h, deg.k)
    Ka, Kb = expand(a, deg.h), expand(b, deg.k)
    best = None
    for s in range(restarts):
        res = refine_kb(Ka, Kb, SolverConfig(ridge=cfg.ridge, tol=cfg.tol, max_iter=cfg.max_iter, method="refine", seed=s))
        if best is None or res.value > best.value:
            best = res
    best.diagnostics["restarts"] = restarts
    return best


def _fit_direction(P: np.ndarray, target: np.ndarray):
    coef, *_ = np.linalg.lstsq(P, target, rcond=None)
    fitted = P @ coef
    return coef, fitted, (_corr(fitted, target) if fitted.std() > 0 else 0.0)


def hgr_sk(a, b, d: int = 5, cfg: SolverConfig = SolverConfig()) -> HgrResult:
    """Single-kernel HGR: the better of the two one-sided polynomial least-squares fits."""
    a, b = _pair(a, b)
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise InvalidDegree(f"degree must be a positive integer, got {d!r}")
    d = int(d)
    _check_sizes(a.size, d)
    Ka, Kb = expand(a, d), expand(b, d)
    za, zb = standardize(a), standardize(b)
    coef_ab, _, r_ab = _fit_direction(Ka.centered, zb)
    coef_ba, _, r_ba = _fit_direction(Kb.centered, za)
    diagnostics = {
        "method": "lstsq",
        "iterations": 0,
        "condition_numbers": [Ka.condition_number, Kb.condition_number],
        "values": {"a_to_b": r_ab, "b_to_a": r_ba},
    }
    one = np.ones(1)
    if r_ab >= r_ba - 1e-12:
        return _finish(Ka.centered, zb[:, None], coef_ab, one, diagnostics, direction="a_to_b", sign_fix=False)
    return _finish(za[:, None], Kb.centered, one, coef_ba, diagnostics, direction="b_to_a", sign_fix=False)


def _pad(v: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[: v.size] = v[:size]
    return out


def degree_scan(a, b, h_max: int, k_max: int, cfg: SolverConfig = SolverConfig(), with_timings: bool = False):
    """Grid of HGR-KB values for ``h = 1..h_max`` (rows) and ``k = 1..k_max`` (columns).

    Each cell is warm-started from its left neighbour (or the cell above for
    the first column), padded with zeros for the extra degree.
    """
    import time

    if h_max < 1 or k_max < 1:
        raise InvalidDegree("grid bounds must be positive")
    a, b = _pair(a, b)
    grid = np.zeros((h_max, k_max))
    times = np.zeros((h_max, k_max))
    prev_row_first = None
    for i in range(h_max):
        prev = prev_row_first
        for j in range(k_max):
            h, k = i + 1, j + 1
            warm = None if prev is None else (_pad(prev.alpha, h), _pad(prev.beta, k))
            cell_cfg = SolverConfig(cfg.ridge, cfg.tol, cfg.max_iter, warm, cfg.method, cfg.seed)
            t0 = time.perf_counter()
            res = hgr_kb(a, b, DegreeConfig(h, k), cell_cfg)
            times[i, j] = time.perf_counter() - t0
            grid[i, j] = res.value
            if j == 0:
                prev_row_first = res
            prev = res
    return (grid, times) if with_timings else grid


def monotonicity_violations(grid: np.ndarray, slack: float = 1e-6):
    """Cells ``(h, k, h', k')`` (1-based) where a larger-degree cell drops below a smaller one."""
    out = []
    H, K = grid.shape
    for i in range(H):
        for j in range(K):
            sub = grid[i:, j:]
            bad = np.argwhere(sub < grid[i, j] - slack)
            out.extend((i + 1, j + 1, int(p + i + 1), int(q + j + 1)) for p, q in bad)
    return out
