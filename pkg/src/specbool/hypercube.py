"""Indexing of the Boolean cube {-1,+1}^d and Walsh-Hadamard transforms.

Point ``i`` has coordinate ``x_j = (-1)**bit_{j-1}(i)``, so index 0 is the
all-(+1) point.  Monomials are indexed the same way: mask ``m`` stands for
``prod_{j : bit_{j-1}(m) = 1} x_j``.  With this convention the unnormalized
Hadamard matrix ``H[i, m] = (-1)**popcount(i & m)`` is at once the matrix of
the recursive definition and the table of all monomials on all points, so

    f(X) = H @ alpha        alpha = H @ f(X) / 2**d
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

MAX_DIM = 24


def _check_dim(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1 or d > MAX_DIM:
        raise ValueError(f"dimension must be an integer in [1, {MAX_DIM}], got {d!r}")


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def log2_length(n: int) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


def parity_sign(a) -> np.ndarray:
    """(-1)**popcount(a), elementwise, as float64."""
    return 1.0 - 2.0 * (np.bitwise_count(np.asarray(a, dtype=np.int64)) & 1)


def index_to_point(i: int, d: int) -> np.ndarray:
    _check_dim(d)
    if not 0 <= i < (1 << d):
        raise ValueError(f"index {i} out of range for d={d}")
    bits = (int(i) >> np.arange(d)) & 1
    return (1 - 2 * bits).astype(np.int8)


def point_to_index(x) -> int:
    x = np.asarray(x)
    bits = (x < 0).astype(np.int64)
    return int(bits @ (1 << np.arange(x.shape[-1], dtype=np.int64)))


def points_to_indices(X) -> np.ndarray:
    """Row-wise inverse of :func:`index_to_point` for an (n, d) sign matrix."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError("expected an (n, d) array of signs")
    if not np.all(np.abs(X) == 1):
        raise ValueError("inputs must take values in {-1, +1}")
    weights = np.left_shift(1, np.arange(X.shape[1], dtype=np.int64))
    return (X < 0).astype(np.int64) @ weights


@lru_cache(maxsize=8)
def _all_points(d: int) -> np.ndarray:
    idx = np.arange(1 << d, dtype=np.int64)
    pts = (1 - 2 * ((idx[:, None] >> np.arange(d)) & 1)).astype(np.float64)
    pts.flags.writeable = False
    return pts


def all_points(d: int) -> np.ndarray:
    """All 2**d points as a read-only (2**d, d) float array in index order."""
    _check_dim(d)
    return _all_points(int(d))


def fwht_in_place(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis, in place.

    Radix-2 butterflies, ``d`` passes of ``N/2`` additions each.  Leading
    axes are treated as a batch.  Returns ``values`` for chaining.
    """
    n = values.shape[-1]
    log2_length(n)
    if values.dtype.kind not in "fi":
        raise TypeError("fwht_in_place needs a float or integer array")
    batch = values.reshape(-1, n)
    if not np.shares_memory(batch, values):
        raise ValueError("fwht_in_place needs a contiguous array")
    h = 1
    while h < n:
        v = batch.reshape(batch.shape[0], -1, 2, h)
        top = v[:, :, 0, :].copy()
        v[:, :, 0, :] += v[:, :, 1, :]
        np.subtract(top, v[:, :, 1, :], out=v[:, :, 1, :])
        h *= 2
    return values


def fwht(values) -> np.ndarray:
    """Out-of-place unnormalized WHT (float64 unless given integers)."""
    arr = np.asarray(values)
    arr = np.array(arr, dtype=np.int64 if arr.dtype.kind in "iu" else np.float64, order="C")
    return fwht_in_place(arr)


def hadamard_matrix(d: int) -> np.ndarray:
    """Dense unnormalized H_{2^d}; only for small d (tests, tiny problems)."""
    _check_dim(d)
    if d > 14:
        raise ValueError("dense Hadamard matrix limited to d <= 14")
    idx = np.arange(1 << d)
    return parity_sign(idx[:, None] & idx[None, :])


@dataclass
class Spectrum:
    """Sparse multilinear coefficients ``{mask: coeff}`` on {-1,+1}^d."""

    d: int
    masks: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        _check_dim(self.d)
        self.masks = np.asarray(self.masks, dtype=np.int64).reshape(-1)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if self.masks.shape != self.coeffs.shape:
            raise ValueError("masks and coeffs must have the same length")
        if self.masks.size:
            if self.masks.min() < 0 or self.masks.max() >= (1 << self.d):
                raise ValueError(f"mask out of range for d={self.d}")
            if np.unique(self.masks).size != self.masks.size:
                raise ValueError("duplicate masks in spectrum")
        order = np.argsort(self.masks, kind="stable")
        self.masks = self.masks[order]
        self.coeffs = self.coeffs[order]

    @classmethod
    def from_dense(cls, d: int, alpha, prune: float | None = None) -> "Spectrum":
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (1 << d,):
            raise ValueError(f"dense spectrum must have length 2**{d}")
        if prune is None:
            masks = np.arange(1 << d)
        else:
            masks = np.flatnonzero(np.abs(alpha) > prune)
        return cls(d, masks, alpha[masks])

    @classmethod
    def from_dict(cls, d: int, entries: dict) -> "Spectrum":
        return cls(d, list(entries.keys()), list(entries.values()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(1 << self.d)
        out[self.masks] = self.coeffs
        return out

    def as_dict(self) -> dict[int, float]:
        return {int(m): float(c) for m, c in zip(self.masks, self.coeffs)}

    def nonzero(self, tol: float = 0.0) -> "Spectrum":
        keep = np.abs(self.coeffs) > tol
        return Spectrum(self.d, self.masks[keep], self.coeffs[keep])

    @property
    def orders(self) -> np.ndarray:
        return np.bitwise_count(self.masks).astype(np.int64)

    def __len__(self) -> int:
        return int(self.masks.size)


def check_table(values, d: int | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("function table must be one-dimensional")
    n_bits = log2_length(values.size)
    if d is not None and n_bits != d:
        raise ValueError(f"table length {values.size} does not match d={d}")
    if not np.all(np.isfinite(values)):
        raise ValueError("function table has non-finite entries")
    return values


def function_to_spectrum(table, prune: float | None = None) -> Spectrum:
    """Coefficients ``alpha = H f / 2**d``.  ``prune`` drops ``|alpha| <= prune``."""
    table = check_table(table)
    d = log2_length(table.size)
    alpha = fwht(table) / table.size
    return Spectrum.from_dense(d, alpha, prune=prune)


def spectrum_to_function(s: Spectrum) -> np.ndarray:
    return fwht_in_place(s.to_dense())


def eval_spectrum_at(s: Spectrum, x) -> float:
    """Evaluate the polynomial at one point in O(k d) without a full table."""
    x = np.asarray(x)
    if x.shape != (s.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({s.d},)")
    if len(s) == 0:
        return 0.0
    signs = parity_sign(s.masks & point_to_index(x))
    return float(signs @ s.coeffs)


def eval_spectrum(s: Spectrum, X) -> np.ndarray:
    """Evaluate at every row of an (n, d) sign matrix."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != s.d:
        raise ValueError(f"inputs must have shape (n, {s.d})")
    idx = points_to_indices(X)
    if len(s) == 0:
        return np.zeros(len(idx))
    # dense table is cheaper once the sample count is comparable to 2^d
    if s.d <= 16 and len(idx) * len(s) > (1 << s.d) * s.d:
        return spectrum_to_function(s)[idx]
    return parity_sign(idx[:, None] & s.masks[None, :]) @ s.coeffs


def hadamard_l1_extremum(d: int) -> tuple[float, np.ndarray]:
    """Exhaustive ``max ||H v||_1`` over ``v`` in {-1,+1}^(2^d).

    Raises if the maximum exceeds ``(2d + 1) 2**d``.
    """
    if d < 1 or d > 4:
        raise ValueError("exhaustive search is limited to 1 <= d <= 4")
    n = 1 << d
    H = hadamard_matrix(d).astype(np.int64)
    best, best_v = -1, None
    chunk = 1 << min(n, 16)
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, start + chunk, dtype=np.int64)
        V = 1 - 2 * ((codes[:, None] >> np.arange(n)) & 1)
        norms = np.abs(V @ H).sum(axis=1)
        j = int(np.argmax(norms))
        if norms[j] > best:
            best, best_v = int(norms[j]), V[j].copy()
    bound = (2 * d + 1) * n
    if best > bound:
        raise ValueError(f"d={d}: ||H v||_1 = {best} exceeds {bound} at v={best_v.tolist()}")
    return float(best), best_v


# -- files -----------------------------------------------------------------

def write_table_csv(path, values) -> None:
    values = check_table(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(values):
            w.writerow([i, repr(float(v))])


def read_table_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "value"]:
        raise ValueError(f"{path}: expected header 'index,value'")
    idx = [int(r[0]) for r in rows[1:]]
    if idx != list(range(len(idx))):
        raise ValueError(f"{path}: rows must be in index order")
    return check_table([float(r[1]) for r in rows[1:]])


def spectrum_to_json(s: Spectrum) -> dict:
    return {"d": int(s.d),
            "entries": [{"mask": int(m), "coeff": float(c)} for m, c in zip(s.masks, s.coeffs)]}


def spectrum_from_json(obj: dict) -> Spectrum:
    masks = [int(e["mask"]) for e in obj["entries"]]
    if any(b <= a for a, b in zip(masks, masks[1:])):
        raise ValueError("spectrum masks must be strictly increasing")
    return Spectrum(int(obj["d"]), masks, [float(e["coeff"]) for e in obj["entries"]])


def write_spectrum_json(path, s: Spectrum) -> None:
    Path(path).write_text(json.dumps(spectrum_to_json(s), indent=1) + "\n")


def read_spectrum_json(path) -> Spectrum:
    return spectrum_from_json(json.loads(Path(path).read_text()))
