"""Landscape probes (QG / RSI), error metrics and Monte-Carlo bound checks."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .hypercube import Spectrum, all_points, fwht_in_place


@dataclass
class ErrSnapshot:
    err: float
    param_dist: float | None = None


def _inputs(inputs, d: int) -> np.ndarray:
    X = inputs.X if hasattr(inputs, "X") else np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"inputs must have shape (n, {d})")
    return X


def empirical_err(model, ref_model, inputs) -> ErrSnapshot:
    """Err_n = mean_i (f(x_i) - f_ref(x_i))^2, plus ||theta - theta_ref|| when comparable."""
    if model.d != ref_model.d:
        raise ValueError("models have different input dimensions")
    X = _inputs(inputs, model.d)
    diff = model.predict(X) - ref_model.predict(X)
    dist = None
    if model.n_params == ref_model.n_params:
        dist = float(np.linalg.norm(model.theta - ref_model.theta))
    return ErrSnapshot(float(diff @ diff / len(X)), dist)


@dataclass
class QGReport:
    """Per-sigma minima of the perturbation ratios.

    ``min_ratio`` is ``min_k sum_i (f_k(x_i) - f*(x_i))^2 / sigma^2`` and
    ``min_ratio_per_param`` the same divided by ``M``.  ``min_qg_ratio`` is
    ``min_k Err_n / ||W_k||^2``, the quantity the other two approximate.
    """

    sigmas: list
    min_ratio: list
    min_ratio_per_param: list
    min_qg_ratio: list
    K: int
    M: int
    n: int

    def rows(self):
        for s, a, b, c in zip(self.sigmas, self.min_ratio, self.min_ratio_per_param, self.min_qg_ratio):
            yield s, a, b, self.K, self.M, c

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma", "min_ratio", "min_ratio_per_param", "K", "M", "min_qg_ratio"])
            for s, a, b, K, M, c in self.rows():
                w.writerow([repr(float(s)), repr(float(a)), repr(float(b)), K, M, repr(float(c))])


def _check_grid(K: int, sigma_grid) -> list:
    if K < 1:
        raise ValueError("K must be >= 1")
    sig = sorted(float(s) for s in sigma_grid)
    if not sig or sig[0] <= 0:
        raise ValueError("sigma grid must be nonempty and positive")
    return sig


def _gaussian(rng, M):
    return rng.standard_normal(M)


def qg_estimate(ref_model, inputs, K: int, sigma_grid, seed=None, draw=None) -> QGReport:
    """Perturb ``theta*`` K times per sigma and keep the smallest output change.

    ``draw(rng, M)`` returns a unit-scale perturbation (standard normal by
    default); it is scaled by sigma.  All-zero perturbations are rejected.
    """
    sig = _check_grid(K, sigma_grid)
    X = _inputs(inputs, ref_model.d)
    draw = draw or _gaussian
    rng = np.random.default_rng(seed)
    base = ref_model.predict(X)
    M = ref_model.n_params
    out = {"r": [], "p": [], "q": []}
    for s in sig:
        best_r = best_q = math.inf
        for _ in range(K):
            W = s * np.asarray(draw(rng, M), dtype=np.float64)
            w2 = float(W @ W)
            if w2 == 0.0:
                raise ValueError("degenerate perturbation: W = 0")
            diff = ref_model.with_theta(ref_model.theta + W).predict(X) - base
            ss = float(diff @ diff)
            best_r = min(best_r, ss / (s * s))
            best_q = min(best_q, ss / len(X) / w2)
        out["r"].append(best_r)
        out["p"].append(best_r / M)
        out["q"].append(best_q)
    return QGReport(sig, out["r"], out["p"], out["q"], K, M, len(X))


@dataclass
class RSIReport:
    sigmas: list
    min_ratio: list
    K: int
    M: int
    notes: list = field(default_factory=list)


def rsi_estimate(ref_model, inputs, K: int, sigma_grid, seed=None, draw=None) -> RSIReport:
    """min_k <W_k, grad Err_n(theta* + W_k)> / ||W_k||^2 per sigma (diagnostic)."""
    sig = _check_grid(K, sigma_grid)
    X = _inputs(inputs, ref_model.d)
    draw = draw or _gaussian
    rng = np.random.default_rng(seed)
    base = ref_model.predict(X)
    M = ref_model.n_params
    mins = []
    for s in sig:
        best = math.inf
        for _ in range(K):
            W = s * np.asarray(draw(rng, M), dtype=np.float64)
            w2 = float(W @ W)
            if w2 == 0.0:
                raise ValueError("degenerate perturbation: W = 0")
            pert = ref_model.with_theta(ref_model.theta + W)
            grad = pert.vjp(X, (2.0 / len(X)) * (pert.predict(X) - base))
            best = min(best, float(W @ grad) / w2)
        mins.append(best)
    return RSIReport(sig, mins, K, M)


def gradient_covariance_bound(model, tol: float = 1e-8, max_iters: int = 10000, seed: int = 0) -> float:
    """Top eigenvalue of E_x[grad f(x) grad f(x)^T] over the full cube (power iteration)."""
    X = all_points(model.d)
    J = model.jacobian(X)
    N = len(X)
    v = np.random.default_rng(seed).standard_normal(model.n_params)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iters):
        w = J.T @ (J @ v) / N
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new - est) <= tol * max(abs(new), 1e-300):
            return new
        est = new
    raise RuntimeError(f"power iteration did not converge in {max_iters} iterations")


@dataclass
class NoiseCheck:
    quantile: float
    bound: float
    envelope: float  # 4 * bound, the theoretical lambda
    stats: np.ndarray


def noise_linf_check(d: int, n: int, sigma: float, delta: float, trials: int, seed=None,
                     c0: float = 1.0) -> NoiseCheck:
    """Sup-norm of the transformed per-point averaged noise vector.

    Each trial draws ``n`` uniform points with pure ``N(0, sigma^2)`` labels,
    forms ``z(x) = (1/n) sum_{i : x_i = x} noise_i`` over the cube, and records
    ``max_m |(H z)_m|``.  Returns the empirical ``(1 - delta)`` quantile next to
    ``c0 * sigma * sqrt((d + ln(1/delta)) / n)``.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if not 0 < delta < 1 or n < 1 or sigma < 0:
        raise ValueError("invalid arguments")
    rng = np.random.default_rng(seed)
    N = 1 << d
    stats = np.empty(trials)
    chunk = max(1, min(trials, (1 << 22) // N))
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        idx = rng.integers(0, N, size=(m, n))
        noise = sigma * rng.standard_normal((m, n))
        z = np.zeros((m, N))
        rows = np.repeat(np.arange(m), n)
        np.add.at(z, (rows, idx.ravel()), noise.ravel() / n)
        stats[start:start + m] = np.abs(fwht_in_place(z)).max(axis=1)
    q = float(np.quantile(stats, 1.0 - delta))
    bound = c0 * sigma * math.sqrt((d + math.log(1.0 / delta)) / n)
    return NoiseCheck(q, bound, 4.0 * bound, stats)


def r_squared(predictions, truths) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.shape != t.shape or t.size < 2:
        raise ValueError("need two equal-length vectors of length >= 2")
    ss_tot = float(((t - t.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ValueError("R^2 undefined for constant truths")
    return 1.0 - float(((t - p) ** 2).sum()) / ss_tot


def _top_masks(s: Spectrum, k: int) -> set:
    keep = np.abs(s.coeffs) > 0
    masks, coeffs = s.masks[keep], s.coeffs[keep]
    order = np.lexsort((masks, -np.abs(coeffs)))
    return set(int(m) for m in masks[order[:k]])


def support_metrics(estimated: Spectrum, truth: Spectrum, k: int) -> tuple[float, float]:
    """(precision, recall) of the top-k masks by |coefficient|."""
    if k < 1:
        raise ValueError("k must be >= 1")
    est, tru = _top_masks(estimated, k), _top_masks(truth, k)
    hit = len(est & tru)
    precision = hit / len(est) if est else 0.0
    recall = hit / len(tru) if tru else 0.0
    return precision, recall
