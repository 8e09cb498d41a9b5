"""Spectral L1 regularizer R(theta) = lam * ||alpha(theta)||_1 and its subgradient.

``alpha(theta) = H f_theta(X) / 2^d`` are the multilinear coefficients of the
model's function table.  This equals ``lam / sqrt(2^d) * ||H_o f_theta(X)||_1``
with the orthonormal Hadamard matrix ``H_o = H / sqrt(2^d)``; for a linear
model it reduces to ``lam * ||theta||_1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypercube import all_points, fwht_in_place
from .models import model_eval_all

ZERO_SIGN_RULES = ("zero", "positive", "negative")


@dataclass(frozen=True)
class RegConfig:
    lam: float
    zero_sign_rule: str = "zero"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"regularization weight must be >= 0, got {self.lam}")
        if self.zero_sign_rule not in ZERO_SIGN_RULES:
            raise ValueError(f"zero_sign_rule must be one of {ZERO_SIGN_RULES}")


def _check_model_dim(model, d: int) -> None:
    if model.d != d:
        raise ValueError(f"model dimension {model.d} does not match d={d}")


def model_spectrum(model) -> np.ndarray:
    """Dense coefficient vector alpha(theta) of length 2^d."""
    table = model_eval_all(model)
    return fwht_in_place(table) / table.size


def regularizer_value(model, d: int, cfg: RegConfig) -> float:
    _check_model_dim(model, d)
    if cfg.lam == 0:
        return 0.0
    return float(cfg.lam * np.abs(model_spectrum(model)).sum())


def sign_with_rule(alpha: np.ndarray, rule: str = "zero") -> np.ndarray:
    z = np.sign(alpha)
    if rule == "positive":
        z[alpha == 0] = 1.0
    elif rule == "negative":
        z[alpha == 0] = -1.0
    return z


def regularizer_subgradient(model, d: int, cfg: RegConfig) -> np.ndarray:
    """G = lam * sum_x w(x) grad_theta f(x) with w = H sgn(alpha) / 2^d."""
    _check_model_dim(model, d)
    if cfg.lam == 0:
        return np.zeros(model.n_params)
    z = sign_with_rule(model_spectrum(model), cfg.zero_sign_rule)
    w = fwht_in_place(z) / z.size
    return cfg.lam * model.vjp(all_points(d), w)
