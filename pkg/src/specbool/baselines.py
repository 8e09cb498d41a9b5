"""Convex references on the explicit monomial basis.

The design matrix ``Phi[i, m] = prod_{j in m} x_ij`` is row ``idx(x_i)`` of the
Hadamard matrix.  Small designs are stored densely; past a memory budget both
products needed by a proximal-gradient solver become one transform each and
``Phi`` is never formed:

    Phi @ a      = (H a)[idx]
    Phi.T @ r    = H (bincount(idx, r))
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hypercube import Spectrum, fwht, parity_sign, point_to_index, points_to_indices
from .trainer import Dataset

MAX_DENSE_DIM = 16


def feature_map(x) -> np.ndarray:
    x = np.asarray(x)
    d = x.shape[0]
    if d > MAX_DENSE_DIM:
        raise ValueError(f"dense monomial features limited to d <= {MAX_DENSE_DIM}")
    return parity_sign(point_to_index(x) & np.arange(1 << d))


class MonomialDesign:
    """``Phi`` for a dataset, dense below ``budget`` entries, matrix-free above."""

    def __init__(self, data: Dataset, budget: int = 1 << 22):
        if data.d > MAX_DENSE_DIM:
            raise ValueError(f"monomial basis limited to d <= {MAX_DENSE_DIM}")
        self.d, self.n = data.d, data.n
        self.N = 1 << data.d
        self.idx = points_to_indices(data.X)
        self.dense = self.columns(np.arange(self.N)) if self.n * self.N <= budget else None

    def matvec(self, a) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ a
        return fwht(a)[self.idx]

    def rmatvec(self, r) -> np.ndarray:
        if self.dense is not None:
            return self.dense.T @ r
        return fwht(np.bincount(self.idx, weights=r, minlength=self.N))

    def columns(self, masks) -> np.ndarray:
        return parity_sign(self.idx[:, None] & np.asarray(masks)[None, :])

    def gram_top_eigenvalue(self, iters: int = 500, tol: float = 1e-10, seed: int = 0) -> float:
        """Largest eigenvalue of Phi^T Phi / n by power iteration."""
        v = np.random.default_rng(seed).standard_normal(self.N)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            w = self.rmatvec(self.matvec(v)) / self.n
            new = float(v @ w)
            v = w / np.linalg.norm(w)
            if abs(new - lam) <= tol * new:
                return new
            lam = new
        return lam


@dataclass
class LassoConfig:
    lam: float
    max_iters: int = 50000
    tol: float = 1e-9
    prune: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


@dataclass
class LassoResult:
    spectrum: Spectrum
    coef: np.ndarray
    objective: float
    n_iter: int
    converged: bool


class LassoNotConverged(UserWarning):
    pass


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lasso_objective(design: MonomialDesign, y, coef, lam: float) -> float:
    r = design.matvec(coef) - y
    return float(r @ r / design.n + lam * np.abs(coef).sum())


def lasso_fista(data: Dataset, cfg: LassoConfig, budget: int = 1 << 22) -> LassoResult:
    """Minimize (1/n)||Phi a - y||^2 + lam ||a||_1 by FISTA with restart on increase.

    Stops when the relative objective change of an accepted step falls below
    ``cfg.tol`` (floored at ``1e-20`` absolute, for objectives near zero) and the
    proximal-gradient mapping at the extrapolated point is
    below ``1e-9`` (sup norm), or at ``max_iters``.  ``budget`` caps the dense
    design size (entries).
    """
    design = MonomialDesign(data, budget)
    y, n, lam = data.y, data.n, cfg.lam
    step = 1.0 / (2.0 * design.gram_top_eigenvalue() * 1.0001)
    x = np.zeros(design.N)
    z, t = x.copy(), 1.0
    f_old = lasso_objective(design, y, x, lam)
    converged = restarted = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = 2.0 / n * design.rmatvec(design.matvec(z) - y)
        x_new = soft_threshold(z - step * grad, step * lam)
        f_new = lasso_objective(design, y, x_new, lam)
        if f_new > f_old and not restarted:
            # momentum overshot: restart from the last accepted point
            z, t, restarted = x.copy(), 1.0, True
            continue
        restarted = False
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z_prev = z
        z = x_new + (t - 1.0) / t_new * (x_new - x)
        gmap = np.abs(z_prev - x_new).max() / step
        x, t = x_new, t_new
        if abs(f_old - f_new) <= cfg.tol * max(abs(f_new), 1e-20) and gmap <= 1e-9:
            f_old = f_new
            converged = True
            break
        f_old = f_new
    if not converged:
        warnings.warn(f"FISTA stopped after {cfg.max_iters} iterations, objective {f_old:.6g}",
                      LassoNotConverged, stacklevel=2)
    spec = Spectrum.from_dense(design.d, x, prune=cfg.prune)
    return LassoResult(spec, x, f_old, it, converged)


def kkt_residuals(data: Dataset, coef, lam: float) -> dict:
    """Violation of the LASSO optimality conditions at ``coef``.

    ``zero``: max over a_m = 0 of (|g_m| - lam)_+ ; ``active``: max over a_m != 0 of
    |g_m + lam sgn(a_m)|, with g = (2/n) Phi^T (Phi a - y).
    """
    design = MonomialDesign(data)
    coef = np.asarray(coef, dtype=np.float64)
    g = 2.0 / data.n * design.rmatvec(design.matvec(coef) - data.y)
    active = coef != 0
    zero_viol = np.maximum(np.abs(g[~active]) - lam, 0.0)
    act_viol = np.abs(g[active] + lam * np.sign(coef[active]))
    return {
        "zero": float(zero_viol.max(initial=0.0)),
        "active": float(act_viol.max(initial=0.0)),
        "n_active": int(active.sum()),
    }


def lambda_max(data: Dataset) -> float:
    """Smallest lam for which a = 0 solves the LASSO."""
    design = MonomialDesign(data)
    return float(2.0 * np.abs(design.rmatvec(data.y)).max() / data.n)


def ordinary_least_squares(data: Dataset, support) -> Spectrum:
    """Least squares on the given masks via ridge-jittered normal equations."""
    design = MonomialDesign(data)
    support = np.asarray(support, dtype=np.int64).reshape(-1)
    if support.size > data.n:
        raise ValueError("support larger than the number of samples")
    A = design.columns(support)
    G = A.T @ A / data.n + 1e-10 * np.eye(support.size)
    b = A.T @ data.y / data.n
    try:
        coef = np.linalg.solve(G, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("normal equations are singular") from exc
    if not np.all(np.isfinite(coef)):
        raise np.linalg.LinAlgError("normal equations are singular")
    return Spectrum(data.d, support, coef)
