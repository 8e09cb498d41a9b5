import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specbool.hypercube import Spectrum, all_points, spectrum_to_function
from specbool.models import (LinearModel, MlpModel, PolynomialModel, build_model, init_model,
                             load_checkpoint, model_eval, model_eval_all, model_param_gradient,
                             parse_model_spec, save_checkpoint)

from conftest import central_difference, monomial_value


def _random_sign(rng, d):
    return rng.choice([-1.0, 1.0], size=d)


def test_model_eval_examples():
    assert model_eval(LinearModel(3, [1, 2, 3]), [1, 1, 1]) == 6.0
    assert model_eval(PolynomialModel(2, [0, 3], [1.0, 2.0]), [-1, -1]) == 3.0


def test_mlp_hand_forward():
    # 2-2-1 net, tanh: hidden = tanh(W1 x + b1), out = w2 . hidden + b2
    W1 = np.array([[0.5, -1.0], [2.0, 0.25]])
    b1 = np.array([0.1, -0.3])
    w2 = np.array([1.5, -0.5])
    b2 = 0.2
    theta = np.concatenate([W1.ravel(), b1, w2, [b2]])
    net = MlpModel([2, 2, 1], theta=theta)
    for x in ([1, 1], [1, -1], [-1, 1], [-1, -1]):
        h = np.tanh(W1 @ np.array(x, float) + b1)
        assert model_eval(net, x) == pytest.approx(w2 @ h + b2, abs=1e-15)


def test_mlp_zero_weights_bias_path():
    # zero weights, biases only: output is b_out + w_out . act(b_hidden) = b_out
    net = MlpModel([2, 2, 1])
    theta = np.zeros(net.n_params)
    theta[-1] = 0.7
    net = net.with_theta(theta)
    assert model_eval(net, [1, -1]) == pytest.approx(0.7)


def test_softplus_forward():
    theta = np.array([1.0, -2.0, 0.5, 3.0, 0.25])
    net = MlpModel([2, 1, 1], "softplus", theta)
    x = np.array([1.0, -1.0])
    h = np.log1p(np.exp(1.0 * 1 + -2.0 * -1 + 0.5))
    assert model_eval(net, x) == pytest.approx(3.0 * h + 0.25, rel=1e-14)


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        model_eval(LinearModel(3), [1, 1])
    with pytest.raises(ValueError):
        model_param_gradient(PolynomialModel(2), [1, 1, 1])


def test_model_eval_all_examples(rng):
    np.testing.assert_array_equal(model_eval_all(LinearModel(2, [1, 0])), [1, -1, 1, -1])
    net = init_model(parse_model_spec("mlp:5,4", 3), seed=1)
    table = model_eval_all(net)
    for i, x in enumerate(all_points(3)):
        assert table[i] == pytest.approx(model_eval(net, x), abs=1e-14)


@pytest.mark.parametrize("d", [3, 8])
def test_full_polynomial_equals_spectrum(d, rng):
    alpha = rng.standard_normal(2 ** d)
    table = model_eval_all(PolynomialModel(d, theta=alpha))
    np.testing.assert_allclose(table, spectrum_to_function(Spectrum.from_dense(d, alpha)), atol=1e-12)


def test_sparse_polynomial_matches_monomials(rng):
    d, masks = 5, [0, 3, 9, 31]
    theta = rng.standard_normal(4)
    m = PolynomialModel(d, masks, theta)
    for x in all_points(d)[::3]:
        ref = sum(t * monomial_value(k, x) for k, t in zip(masks, theta))
        assert model_eval(m, x) == pytest.approx(ref, abs=1e-13)


def test_param_gradient_examples():
    np.testing.assert_array_equal(model_param_gradient(LinearModel(3, [4, 5, 6]), [1, -1, 1]), [1, -1, 1])
    g = model_param_gradient(PolynomialModel(2, [0, 1, 3]), [-1, 1])
    np.testing.assert_array_equal(g, [1, -1, -1])


@pytest.mark.parametrize("spec", ["linear", "poly:full", "poly:0,5,6,12", "mlp:6,5", "mlp:4,4:softplus"])
def test_gradient_matches_finite_differences(spec, rng):
    d = 4
    model = init_model(parse_model_spec(spec, d), seed=3)
    for _ in range(100 if model.n_params <= 20 else 10):
        theta = rng.standard_normal(model.n_params)
        x = _random_sign(rng, d)
        g = model_param_gradient(model.with_theta(theta), x)
        fd = central_difference(lambda t: model_eval(model.with_theta(t), x), theta)
        scale = max(1.0, np.max(np.abs(fd)))
        assert np.max(np.abs(g - fd)) <= 1e-6 * scale


def test_jacobian_and_vjp_consistent(rng):
    net = init_model(parse_model_spec("mlp:7,3", 5), seed=0)
    X = all_points(5)[rng.choice(32, 9, replace=False)]
    J = net.jacobian(X)
    for i, x in enumerate(X):
        np.testing.assert_allclose(J[i], model_param_gradient(net, x), atol=1e-14)
    c = rng.standard_normal(9)
    np.testing.assert_allclose(net.vjp(X, c), J.T @ c, atol=1e-12)
    poly = PolynomialModel(5, theta=rng.standard_normal(32))
    Xp = all_points(5)[[0, 4, 4, 31]]
    np.testing.assert_allclose(poly.vjp(Xp, c[:4]), poly.jacobian(Xp).T @ c[:4], atol=1e-12)


def test_mlp_second_differences_smooth(rng):
    net = init_model(parse_model_spec("mlp:8,8", 4), seed=2)
    x = _random_sign(rng, 4)
    u = rng.standard_normal(net.n_params)
    u /= np.linalg.norm(u)
    ts = np.linspace(-1, 1, 401)
    h = ts[1] - ts[0]
    vals = np.array([model_eval(net.with_theta(net.theta + t * u), x) for t in ts])
    second = (vals[2:] - 2 * vals[1:-1] + vals[:-2]) / h ** 2
    assert np.all(np.isfinite(second))
    # no kinks: consecutive second differences move continuously
    assert np.max(np.abs(np.diff(second))) < 0.5


def test_init_model_properties():
    spec = parse_model_spec("mlp:16,16", 4)
    a, b = init_model(spec, seed=9), init_model(spec, seed=9)
    np.testing.assert_array_equal(a.theta, b.theta)
    assert not np.array_equal(a.theta, init_model(spec, seed=10).theta)
    for W, bias in a.layers():
        assert np.all(bias == 0)
        limit = np.sqrt(6.0 / sum(W.shape))
        assert np.all(np.abs(W) <= limit)
    assert np.all(init_model(parse_model_spec("linear", 6), seed=0).theta == 0)
    assert np.all(init_model(parse_model_spec("poly:full", 3), seed=0).theta == 0)


def test_xavier_variance():
    net = init_model({"kind": "mlp", "spec": {"widths": [4, 1000, 1000, 1]}}, seed=0)
    W = net.layers()[1][0]
    target = 2.0 / 2000
    assert abs(W.var() - target) <= 0.2 * target


def test_parse_model_spec():
    assert parse_model_spec("linear", 4) == {"kind": "linear", "spec": {"d": 4}}
    assert parse_model_spec("mlp:64,64,64", 10)["spec"]["widths"] == [10, 64, 64, 64, 1]
    assert parse_model_spec("mlp", 3)["spec"]["widths"] == [3, 64, 64, 64, 1]
    assert parse_model_spec("mlp:8:softplus", 3)["spec"]["activation"] == "softplus"
    assert parse_model_spec("poly:1,2", 3)["spec"]["support"] == [1, 2]
    with pytest.raises(ValueError):
        parse_model_spec("cnn", 3)


def test_invalid_models():
    with pytest.raises(ValueError):
        MlpModel([3, 4, 2])
    with pytest.raises(ValueError):
        MlpModel([3, 4, 1], activation="relu")
    with pytest.raises(ValueError):
        PolynomialModel(2, [0, 4])
    with pytest.raises(ValueError):
        LinearModel(3, [1, 2])


def test_models_are_immutable():
    m = LinearModel(2, [1.0, 2.0])
    with pytest.raises(ValueError):
        m.theta[0] = 3.0
    m2 = m.with_theta([0.0, 0.0])
    assert m.theta.tolist() == [1.0, 2.0] and m2.theta.tolist() == [0.0, 0.0]


@pytest.mark.parametrize("spec", ["linear", "poly:full", "poly:3,5", "mlp:4:softplus"])
def test_checkpoint_round_trip(tmp_path, spec, rng):
    m = init_model(parse_model_spec(spec, 3), seed=4)
    m = m.with_theta(rng.standard_normal(m.n_params))
    save_checkpoint(tmp_path / "m.json", m)
    back = load_checkpoint(tmp_path / "m.json")
    assert back.kind == m.kind and back.spec() == m.spec()
    np.testing.assert_array_equal(back.theta, m.theta)
    np.testing.assert_array_equal(back.predict(all_points(3)), m.predict(all_points(3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_linear_prediction_is_dot_product(d, seed):
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(d)
    X = all_points(d)
    np.testing.assert_allclose(LinearModel(d, theta).predict(X), X @ theta, atol=1e-14)
    assert build_model("linear", {"d": d}, theta).n_params == d
