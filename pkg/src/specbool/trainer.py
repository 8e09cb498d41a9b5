"""Training on L_n(theta) + R(theta) with plain (sub)gradient descent."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .hypercube import all_points, fwht_in_place
from .spectral_reg import RegConfig, regularizer_subgradient, regularizer_value, sign_with_rule

WEIGHT_PENALTIES = ("none", "l1_weights", "l2_weights")


@dataclass
class Dataset:
    """``n`` labelled points: ``X`` is (n, d) with entries in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, d) with one label per row")
        if self.X.shape[0] < 1:
            raise ValueError("dataset is empty")
        if not np.all(np.abs(self.X) == 1):
            raise ValueError("inputs must take values in {-1, +1}")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("labels must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows])


@dataclass
class TrainConfig:
    lam: float = 0.0
    learning_rate: float = 1e-2
    epochs: int = 2000
    batch_size: int | None = None
    warmup_epochs: int = 0
    seed: int = 0
    stationarity_tol: float = 1e-3
    interpolation_delta: float | None = None
    weight_penalty: str = "none"
    weight_penalty_strength: float = 0.0
    zero_sign_rule: str = "zero"
    # fraction of the final epochs whose iterates are averaged into the output
    average_tail: float = 0.0
    log_every: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0 or self.warmup_epochs < 0 or self.epochs < self.warmup_epochs:
            raise ValueError("need 0 <= warmup_epochs <= epochs")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.weight_penalty not in WEIGHT_PENALTIES:
            raise ValueError(f"weight_penalty must be one of {WEIGHT_PENALTIES}")
        if not 0.0 <= self.average_tail < 1.0:
            raise ValueError("average_tail must be in [0, 1)")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")

    @property
    def reg(self) -> RegConfig:
        return RegConfig(self.lam, self.zero_sign_rule)


@dataclass
class TrainReport:
    theta: np.ndarray
    trajectory: list = field(default_factory=list)  # (epoch, mse, reg, total)
    final_mse: float = math.nan
    final_reg: float = math.nan
    stationarity_residual: float = math.nan
    is_stationary: bool = False
    interpolation_delta: float = math.nan
    is_interpolator: bool = False
    wall_time: float = 0.0

    @property
    def final_objective(self) -> float:
        return self.final_mse + self.final_reg

    def to_json(self) -> dict:
        """JSON form; wall time is left out so reruns are byte-identical."""
        out = asdict(self)
        out.pop("wall_time")
        out["theta"] = [float(t) for t in self.theta]
        out["trajectory"] = [[int(e), float(a), float(b), float(c)] for e, a, b, c in self.trajectory]
        return out


class TrainingDiverged(RuntimeError):
    """The loss became non-finite; carries the last finite state."""

    def __init__(self, epoch: int, theta: np.ndarray, trajectory: list):
        super().__init__(f"training diverged at epoch {epoch}")
        self.epoch = epoch
        self.theta = theta
        self.trajectory = trajectory


def _check(model, data: Dataset) -> None:
    if model.d != data.d:
        raise ValueError(f"model dimension {model.d} does not match data dimension {data.d}")


def mse_loss(model, data: Dataset) -> float:
    _check(model, data)
    r = model.predict(data.X) - data.y
    return float(r @ r / data.n)


def mse_gradient(model, data: Dataset) -> np.ndarray:
    _check(model, data)
    r = model.predict(data.X) - data.y
    return model.vjp(data.X, (2.0 / data.n) * r)


def objective(model, data: Dataset, lam: float) -> float:
    return mse_loss(model, data) + regularizer_value(model, data.d, RegConfig(lam))


def default_delta(y) -> float:
    return 1e-3 * float(np.var(y))


def _weight_penalty(theta, cfg: TrainConfig) -> tuple[float, np.ndarray | float]:
    s = cfg.weight_penalty_strength
    if cfg.weight_penalty == "l1_weights":
        return s * float(np.abs(theta).sum()), s * np.sign(theta)
    if cfg.weight_penalty == "l2_weights":
        return s * float(theta @ theta), 2.0 * s * theta
    return 0.0, 0.0


def stationarity_residual(model, data: Dataset, cfg: TrainConfig) -> float:
    g = mse_gradient(model, data) + regularizer_subgradient(model, data.d, cfg.reg)
    g = g + _weight_penalty(model.theta, cfg)[1]
    return float(np.linalg.norm(g))


class _LinearPath:
    """Precomputed matrices for models with f_theta(x) = phi(x) . theta.

    ``A`` holds the data features, ``B`` maps theta to the spectrum alpha
    (``None`` when it is exactly the identity, as for a full-support
    polynomial).  Gradients then cost a few dense products per step.
    """

    BUDGET = 1 << 24

    def __init__(self, model, data: Dataset):
        self.A = model.jacobian(data.X)
        self.y = data.y
        self.Q = self.A.T @ self.A / data.n
        self.b = self.A.T @ data.y / data.n
        J = model.jacobian(all_points(data.d))
        B = fwht_in_place(np.ascontiguousarray(J.T)).T / J.shape[0]
        self.B = None if B.shape[0] == B.shape[1] and np.array_equal(B, np.eye(B.shape[0])) else B

    @classmethod
    def applies(cls, model, data: Dataset) -> bool:
        m = model.n_params
        return model.linear_in_params and max(data.n, 1 << data.d, m) * m <= cls.BUDGET

    def mse_grad(self, theta, rows):
        if rows is None:
            return 2.0 * (self.Q @ theta - self.b)
        A = self.A[rows]
        return (2.0 / len(rows)) * (A.T @ (A @ theta - self.y[rows]))

    def reg_grad(self, theta, reg: RegConfig):
        if self.B is None:
            return reg.lam * sign_with_rule(theta, reg.zero_sign_rule)
        return reg.lam * (self.B.T @ sign_with_rule(self.B @ theta, reg.zero_sign_rule))


def train(model, data: Dataset, cfg: TrainConfig) -> TrainReport:
    """(Sub)gradient descent with a constant step.

    The first ``warmup_epochs`` use the unregularized MSE; afterwards the
    spectral subgradient is added.  Minibatches are reshuffled every epoch
    from ``cfg.seed``; ``batch_size=None`` means full batch.  With
    ``average_tail > 0`` the returned parameters are the mean of the iterates
    over that final fraction of epochs.
    """
    _check(model, data)
    t0 = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    reg = cfg.reg
    d, n = data.d, data.n
    batch = n if cfg.batch_size is None else min(cfg.batch_size, n)
    lr = cfg.learning_rate
    fast = _LinearPath(model, data) if _LinearPath.applies(model, data) else None

    def gradient(theta, rows, regularized):
        if fast is not None:
            g = fast.mse_grad(theta, rows)
            if regularized:
                g = g + fast.reg_grad(theta, reg)
        else:
            m = model.with_theta(theta)
            Xb, yb = (data.X, data.y) if rows is None else (data.X[rows], data.y[rows])
            g = m.vjp(Xb, (2.0 / len(yb)) * (m.predict(Xb) - yb))
            if regularized:
                g = g + regularizer_subgradient(m, d, reg)
        if cfg.weight_penalty != "none":
            g = g + _weight_penalty(theta, cfg)[1]
        return g

    def log_point(theta, epoch):
        m = model.with_theta(theta)
        mse = mse_loss(m, data)
        r = regularizer_value(m, d, reg)
        return (epoch, mse, r, mse + r + _weight_penalty(theta, cfg)[0])

    theta = model.theta.copy()
    trajectory = [log_point(theta, 0)]
    avg_start = cfg.epochs - int(round(cfg.average_tail * cfg.epochs))
    avg, n_avg = np.zeros_like(theta), 0

    # divergence is detected explicitly below; silence the overflow on the way there
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            regularized = epoch > cfg.warmup_epochs and reg.lam > 0
            if batch < n:
                order = rng.permutation(n)
                batches = [order[s:s + batch] for s in range(0, n, batch)]
            else:
                batches = [None]
            for rows in batches:
                step = theta - lr * gradient(theta, rows, regularized)
                if not np.all(np.isfinite(step)):
                    raise TrainingDiverged(epoch, theta, trajectory)
                theta = step
            if epoch > avg_start:
                avg += theta
                n_avg += 1
            if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
                point = log_point(theta, epoch)
                if not math.isfinite(point[3]):
                    raise TrainingDiverged(epoch, theta, trajectory)
                trajectory.append(point)

    if n_avg:
        theta = avg / n_avg
    final = model.with_theta(theta)
    mse = mse_loss(final, data)
    rval = regularizer_value(final, d, reg)
    residual = stationarity_residual(final, data, cfg)
    delta = default_delta(data.y) if cfg.interpolation_delta is None else cfg.interpolation_delta
    return TrainReport(
        theta=theta,
        trajectory=trajectory,
        final_mse=mse,
        final_reg=rval,
        stationarity_residual=residual,
        is_stationary=residual <= cfg.stationarity_tol,
        interpolation_delta=delta,
        is_interpolator=mse <= delta,
        wall_time=time.perf_counter() - t0,
    )


def theoretical_lambda(sigma: float, d: int, n: int, delta: float, c0: float = 1.0) -> float:
    """lam = 4 C0 sigma sqrt((d + ln(1/delta)) / n)."""
    if sigma < 0 or n < 1 or not 0 < delta < 1 or d < 1 or c0 <= 0:
        raise ValueError("need sigma >= 0, n >= 1, d >= 1, 0 < delta < 1, C0 > 0")
    return 4.0 * c0 * sigma * math.sqrt((d + math.log(1.0 / delta)) / n)


def theoretical_n0(sigma, d, mu, L, k, delta, c_star, c1: float = 1.0) -> float:
    """n0 = C1 sigma^2 (d^2 mu^2 + L^2 k)(d + ln(1/delta)) / C*^2."""
    if c_star == 0:
        raise ValueError("C* must be nonzero")
    if sigma < 0 or mu < 0 or L < 0 or k < 0 or d < 1 or not 0 < delta < 1:
        raise ValueError("invalid inputs for n0")
    return c1 * sigma ** 2 * (d * d * mu * mu + L * L * k) * (d + math.log(1.0 / delta)) / c_star ** 2
