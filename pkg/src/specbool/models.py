"""Parametric function families on {-1,+1}^d.

Every model exposes batched evaluation on an (n, d) sign matrix:

* ``predict(X)``      -> (n,) outputs
* ``vjp(X, c)``       -> sum_i c_i * grad_theta f(x_i), shape (M,)
* ``jacobian(X)``     -> (n, M) per-point parameter gradients

Models are immutable; ``with_theta`` returns a copy with new parameters.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .hypercube import MAX_DIM, all_points, fwht, parity_sign, points_to_indices


def _as_inputs(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"inputs must have {d} columns, got shape {X.shape}")
    return X


class LinearModel:
    """f(x) = <theta, x>."""

    kind = "linear"
    linear_in_params = True

    def __init__(self, d: int, theta=None):
        self.d = int(d)
        self.theta = np.zeros(self.d) if theta is None else np.array(theta, dtype=np.float64)
        if self.theta.shape != (self.d,):
            raise ValueError(f"linear model needs {self.d} parameters")
        self.theta.flags.writeable = False

    @property
    def n_params(self) -> int:
        return self.d

    def spec(self) -> dict:
        return {"d": self.d}

    def with_theta(self, theta) -> "LinearModel":
        return LinearModel(self.d, theta)

    def predict(self, X) -> np.ndarray:
        return _as_inputs(X, self.d) @ self.theta

    def jacobian(self, X) -> np.ndarray:
        return _as_inputs(X, self.d).copy()

    def vjp(self, X, cot) -> np.ndarray:
        return _as_inputs(X, self.d).T @ np.asarray(cot, dtype=np.float64)


class PolynomialModel:
    """f(x) = sum_m theta_m prod_{j in m} x_j over a fixed list of masks."""

    kind = "polynomial"
    linear_in_params = True

    def __init__(self, d: int, support=None, theta=None):
        self.d = int(d)
        if support is None:
            support = np.arange(1 << self.d)
        self.support = np.asarray(support, dtype=np.int64).reshape(-1)
        if self.support.size and (self.support.min() < 0 or self.support.max() >= (1 << self.d)):
            raise ValueError("support mask out of range")
        if np.unique(self.support).size != self.support.size:
            raise ValueError("support masks must be distinct")
        self.full = self.support.size == (1 << self.d) and np.array_equal(
            self.support, np.arange(1 << self.d))
        m = self.support.size
        self.theta = np.zeros(m) if theta is None else np.array(theta, dtype=np.float64)
        if self.theta.shape != (m,):
            raise ValueError(f"polynomial model needs {m} parameters")
        self.theta.flags.writeable = False

    @property
    def n_params(self) -> int:
        return int(self.support.size)

    def spec(self) -> dict:
        if self.full:
            return {"d": self.d, "support": "full"}
        return {"d": self.d, "support": self.support.tolist()}

    def with_theta(self, theta) -> "PolynomialModel":
        out = PolynomialModel.__new__(PolynomialModel)
        out.d, out.support, out.full = self.d, self.support, self.full
        out.theta = np.array(theta, dtype=np.float64)
        if out.theta.shape != self.theta.shape:
            raise ValueError("parameter vector has the wrong length")
        out.theta.flags.writeable = False
        return out

    def features(self, X) -> np.ndarray:
        idx = points_to_indices(_as_inputs(X, self.d))
        return parity_sign(idx[:, None] & self.support[None, :])

    def predict(self, X) -> np.ndarray:
        X = _as_inputs(X, self.d)
        if self.full:
            return fwht(self.theta)[points_to_indices(X)]
        return self.features(X) @ self.theta

    def jacobian(self, X) -> np.ndarray:
        return self.features(X)

    def vjp(self, X, cot) -> np.ndarray:
        X = _as_inputs(X, self.d)
        cot = np.asarray(cot, dtype=np.float64)
        if self.full:
            idx = points_to_indices(X)
            return fwht(np.bincount(idx, weights=cot, minlength=1 << self.d))
        return self.features(X).T @ cot


_ACTIVATIONS = {
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "softplus": (lambda z: np.logaddexp(0.0, z), lambda z, a: 0.5 * (1.0 + np.tanh(0.5 * z))),
}


class MlpModel:
    """Fully connected net with a smooth activation and an affine output.

    ``widths`` is ``[d, h_1, ..., h_L, 1]``.  Parameters are flattened layer by
    layer as ``W_l`` (row-major, shape (out, in)) followed by ``b_l``.
    """

    kind = "mlp"
    linear_in_params = False

    def __init__(self, widths, activation: str = "tanh", theta=None):
        self.widths = [int(w) for w in widths]
        if len(self.widths) < 2 or min(self.widths) < 1 or self.widths[-1] != 1:
            raise ValueError(f"invalid layer widths {widths}; need [d, ..., 1]")
        if self.widths[0] > MAX_DIM:
            raise ValueError(f"input dimension above {MAX_DIM}")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.d = self.widths[0]
        self.activation = activation
        self._shapes = [(o, i) for i, o in zip(self.widths[:-1], self.widths[1:])]
        m = sum(o * i + o for o, i in self._shapes)
        self.theta = np.zeros(m) if theta is None else np.array(theta, dtype=np.float64)
        if self.theta.shape != (m,):
            raise ValueError(f"mlp needs {m} parameters, got {self.theta.shape}")
        self.theta.flags.writeable = False

    @property
    def n_params(self) -> int:
        return int(self.theta.size)

    def spec(self) -> dict:
        return {"widths": list(self.widths), "activation": self.activation}

    def with_theta(self, theta) -> "MlpModel":
        return MlpModel(self.widths, self.activation, theta)

    def layers(self, theta=None):
        theta = self.theta if theta is None else theta
        out, pos = [], 0
        for o, i in self._shapes:
            W = theta[pos:pos + o * i].reshape(o, i)
            pos += o * i
            out.append((W, theta[pos:pos + o]))
            pos += o
        return out

    def _forward(self, X):
        act = _ACTIVATIONS[self.activation][0]
        layers = self.layers()
        zs, acts = [], [X]
        a = X
        for li, (W, b) in enumerate(layers):
            z = a @ W.T + b
            if li == len(layers) - 1:
                return z[:, 0], zs, acts
            a = act(z)
            zs.append(z)
            acts.append(a)

    def predict(self, X) -> np.ndarray:
        return self._forward(_as_inputs(X, self.d))[0]

    def _backward(self, X, cot, per_sample: bool):
        dact = _ACTIVATIONS[self.activation][1]
        _, zs, acts = self._forward(X)
        layers = self.layers()
        delta = cot[:, None]
        grads = []
        for li in range(len(layers) - 1, -1, -1):
            W, _ = layers[li]
            a_prev = acts[li]
            if per_sample:
                gW = (delta[:, :, None] * a_prev[:, None, :]).reshape(len(X), -1)
                gb = delta
            else:
                gW = (delta.T @ a_prev).reshape(-1)
                gb = delta.sum(axis=0)
            grads.append((gW, gb))
            if li:
                delta = (delta @ W) * dact(zs[li - 1], acts[li])
        grads.reverse()
        parts = [p for pair in grads for p in pair]
        return np.concatenate(parts, axis=-1)

    def vjp(self, X, cot) -> np.ndarray:
        X = _as_inputs(X, self.d)
        return self._backward(X, np.asarray(cot, dtype=np.float64), per_sample=False)

    def jacobian(self, X) -> np.ndarray:
        X = _as_inputs(X, self.d)
        return self._backward(X, np.ones(len(X)), per_sample=True)


Model = LinearModel | PolynomialModel | MlpModel


def model_eval(model, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({model.d},)")
    return float(model.predict(x[None, :])[0])


def model_eval_all(model) -> np.ndarray:
    """Function table of ``model`` on all 2^d points, in index order."""
    return model.predict(all_points(model.d))


def model_param_gradient(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({model.d},)")
    return model.jacobian(x[None, :])[0]


def parse_model_spec(text: str, d: int) -> dict:
    """``linear`` | ``poly:full`` | ``poly:<m1>,<m2>,...`` | ``mlp:64,64,64[:softplus]``."""
    kind, _, rest = text.partition(":")
    if kind == "linear":
        return {"kind": "linear", "spec": {"d": d}}
    if kind == "poly":
        if rest in ("", "full"):
            return {"kind": "polynomial", "spec": {"d": d, "support": "full"}}
        return {"kind": "polynomial", "spec": {"d": d, "support": [int(m) for m in rest.split(",")]}}
    if kind == "mlp":
        hidden, _, activation = rest.partition(":")
        widths = [d] + ([int(h) for h in hidden.split(",")] if hidden else [64, 64, 64]) + [1]
        return {"kind": "mlp", "spec": {"widths": widths, "activation": activation or "tanh"}}
    raise ValueError(f"unknown model spec {text!r}")


def build_model(kind: str, spec: dict, theta=None):
    if kind == "linear":
        return LinearModel(spec["d"], theta)
    if kind == "polynomial":
        support = spec.get("support", "full")
        return PolynomialModel(spec["d"], None if support == "full" else support, theta)
    if kind == "mlp":
        return MlpModel(spec["widths"], spec.get("activation", "tanh"), theta)
    raise ValueError(f"unknown model kind {kind!r}")


def init_model(model_spec: dict, seed: int = 0):
    """Zero init for linear/polynomial; Xavier-uniform weights and zero biases for MLPs."""
    model = build_model(model_spec["kind"], model_spec["spec"])
    if model.kind != "mlp":
        return model
    rng = np.random.default_rng(seed)
    parts = []
    for o, i in model._shapes:
        limit = np.sqrt(6.0 / (i + o))
        parts.append(rng.uniform(-limit, limit, size=o * i))
        parts.append(np.zeros(o))
    return model.with_theta(np.concatenate(parts))


def checkpoint_dict(model) -> dict:
    return {"kind": model.kind, "spec": model.spec(), "theta": [float(t) for t in model.theta]}


def save_checkpoint(path, model) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(model)) + "\n")


def load_checkpoint(path):
    obj = json.loads(Path(path).read_text())
    return build_model(obj["kind"], obj["spec"], obj["theta"])
