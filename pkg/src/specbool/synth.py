"""Sparse ground-truth polynomials and noisy samples from them."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .hypercube import Spectrum, all_points, eval_spectrum, index_to_point
from .trainer import Dataset


@dataclass
class GroundTruth:
    spectrum: Spectrum
    family: str
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.spectrum.d

    @property
    def k(self) -> int:
        return len(self.spectrum)

    def __call__(self, X) -> np.ndarray:
        return eval_spectrum(self.spectrum, X)


def _mask(coords) -> int:
    return sum(1 << int(c) for c in coords)


def _random_masks(rng, d: int, order: int, k: int) -> list[int]:
    total = math.comb(d, order)
    if k > total:
        raise ValueError(f"cannot draw {k} distinct order-{order} masks in dimension {d}")
    if total <= 20000:
        pool = [_mask(c) for c in itertools.combinations(range(d), order)]
        return [pool[i] for i in rng.choice(total, size=k, replace=False)]
    seen: list[int] = []
    while len(seen) < k:
        m = _mask(rng.choice(d, size=order, replace=False))
        if m not in seen:
            seen.append(m)
    return seen


def gen_monomial(d: int, order: int, seed=None, sign: float = 1.0) -> GroundTruth:
    if not 1 <= order <= d:
        raise ValueError(f"order must be in [1, {d}], got {order}")
    rng = np.random.default_rng(seed)
    m = _random_masks(rng, d, order, 1)[0]
    return GroundTruth(Spectrum(d, [m], [float(sign)]), "monomial", {"order": order, "k": 1})


def gen_power_law(d: int, k: int, order: int = 2, exponent: float = 1.0, seed=None) -> GroundTruth:
    """k random order-``order`` monomials with |coeff_j| = j**-exponent and random signs."""
    if k < 1 or not 1 <= order <= d:
        raise ValueError("need k >= 1 and 1 <= order <= d")
    rng = np.random.default_rng(seed)
    masks = _random_masks(rng, d, order, k)
    mags = np.arange(1, k + 1, dtype=np.float64) ** (-float(exponent))
    signs = rng.choice([-1.0, 1.0], size=k)
    coeffs = signs * mags / mags.max()
    return GroundTruth(Spectrum(d, masks, coeffs), "power_law",
                       {"order": order, "k": k, "exponent": exponent})


def gen_staircase(d: int, seed=None, ratio: float = 0.7) -> GroundTruth:
    """3 singletons, 6 order-2 and 9 order-3 masks forming nested chains.

    Each singleton gets two order-2 supersets; the first three order-2 masks
    get two order-3 supersets each and the last three get one.  Coefficients
    are 1, ratio and ratio**2 per order.
    """
    if d < 5:
        raise ValueError("staircase needs d >= 5")
    rng = np.random.default_rng(seed)
    singles = [int(c) for c in rng.choice(d, size=3, replace=False)]
    others = [c for c in range(d) if c not in singles]
    order2 = []
    for s in singles:
        for c in rng.choice(others, size=2, replace=False):
            order2.append((1 << s) | (1 << int(c)))
    used = set(order2)
    order3 = []
    for j, m2 in enumerate(order2):
        free = [c for c in range(d) if not m2 >> c & 1 and (m2 | 1 << c) not in used]
        need = 2 if j < 3 else 1
        if len(free) < need:
            raise ValueError(f"staircase chain construction infeasible for d={d}")
        for c in rng.choice(free, size=need, replace=False):
            m3 = m2 | (1 << int(c))
            order3.append(m3)
            used.add(m3)
    masks = [1 << s for s in singles] + order2 + order3
    coeffs = [1.0] * 3 + [ratio] * 6 + [ratio ** 2] * 9
    return GroundTruth(Spectrum(d, masks, coeffs), "staircase", {"k": 18, "ratio": ratio})


def qg_preset() -> GroundTruth:
    """f(x) = 3 x1 + 4 x2 x3 + 5 x4 x5 + x12 on {-1,+1}^13."""
    masks = [_mask([0]), _mask([1, 2]), _mask([3, 4]), _mask([11])]
    return GroundTruth(Spectrum(13, masks, [3.0, 4.0, 5.0, 1.0]), "explicit", {"name": "qg_preset"})


def sample_dataset(gt: GroundTruth, n: int, sigma: float, seed=None, replace: bool = True) -> Dataset:
    """n uniform points (with replacement unless ``replace=False``), Gaussian label noise."""
    if n < 1 or sigma < 0:
        raise ValueError("need n >= 1 and sigma >= 0")
    rng = np.random.default_rng(seed)
    d = gt.d
    if replace:
        X = 1.0 - 2.0 * rng.integers(0, 2, size=(n, d))
    else:
        if n > (1 << d):
            raise ValueError("cannot draw more distinct points than 2^d")
        if d <= 20:
            idx = rng.choice(1 << d, size=n, replace=False)
            X = all_points(d)[idx]
        else:
            idx = rng.choice(1 << d, size=n, replace=False)
            X = np.array([index_to_point(int(i), d) for i in idx], dtype=np.float64)
    y = gt(X) + sigma * rng.standard_normal(n)
    return Dataset(X, y)


def write_dataset_csv(path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{j + 1}" for j in range(data.d)] + ["y"])
        for x, y in zip(data.X, data.y):
            w.writerow([int(v) for v in x] + [repr(float(y))])


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    d = len(header) - 1
    if d < 1 or header != [f"x_{j + 1}" for j in range(d)] + ["y"]:
        raise ValueError(f"{path}: expected header x_1,...,x_d,y")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(-1, d + 1)
    return Dataset(body[:, :d], body[:, d])
