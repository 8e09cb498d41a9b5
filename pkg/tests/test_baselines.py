import warnings

import numpy as np
import pytest

from specbool.baselines import (LassoConfig, LassoNotConverged, MonomialDesign, feature_map,
                                kkt_residuals, lambda_max, lasso_fista, lasso_objective,
                                ordinary_least_squares, soft_threshold)
from specbool.hypercube import all_points
from specbool.models import PolynomialModel
from specbool.synth import gen_power_law, sample_dataset
from specbool.trainer import Dataset, TrainConfig, theoretical_lambda, train

from conftest import kron_hadamard, monomial_value


def test_feature_map_examples():
    np.testing.assert_array_equal(feature_map(np.ones(4)), np.ones(16))
    np.testing.assert_array_equal(feature_map(np.array([-1, 1])), [1, -1, 1, -1])
    H = kron_hadamard(6)
    pts = all_points(6)
    for i in (0, 7, 33, 63):
        np.testing.assert_array_equal(feature_map(pts[i]), H[i])
        assert [monomial_value(m, pts[i]) for m in range(64)] == feature_map(pts[i]).tolist()
    with pytest.raises(ValueError):
        feature_map(np.ones(17))


def test_design_dense_and_matrix_free_agree(rng):
    data = sample_dataset(gen_power_law(7, 3, 2, seed=0), 90, 0.1, seed=1)
    dense = MonomialDesign(data)
    free = MonomialDesign(data, budget=0)
    assert dense.dense is not None and free.dense is None
    a, r = rng.standard_normal(128), rng.standard_normal(90)
    np.testing.assert_allclose(dense.matvec(a), free.matvec(a), atol=1e-12)
    np.testing.assert_allclose(dense.rmatvec(r), free.rmatvec(r), atol=1e-12)
    Phi = np.stack([feature_map(x) for x in data.X])
    np.testing.assert_array_equal(dense.dense, Phi)
    top = np.linalg.eigvalsh(Phi.T @ Phi / 90)[-1]
    assert free.gram_top_eigenvalue() == pytest.approx(top, rel=1e-6)


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 2.0]), 1.0),
                                  [-2.0, 0.0, 0.0, 0.0, 1.0])


def test_lambda_zero_interpolates_noiseless():
    gt = gen_power_law(8, 5, 3, seed=2)
    data = sample_dataset(gt, 256, 0.0, seed=3, replace=False)
    res = lasso_fista(data, LassoConfig(0.0))
    design = MonomialDesign(data)
    resid = design.matvec(res.coef) - data.y
    assert res.converged and np.max(np.abs(resid)) <= 1e-8


def test_lambda_max_gives_zero():
    data = sample_dataset(gen_power_law(8, 3, 2, seed=1), 150, 0.1, seed=1)
    lm = lambda_max(data)
    assert len(lasso_fista(data, LassoConfig(lm)).spectrum) == 0
    assert len(lasso_fista(data, LassoConfig(0.9 * lm)).spectrum) > 0


@pytest.mark.parametrize("seed", range(3))
def test_kkt_certificate(seed):
    data = sample_dataset(gen_power_law(8, 3, 2, seed=seed), 120, 0.1, seed=50 + seed)
    lam = theoretical_lambda(0.1, 8, 120, 0.05)
    res = lasso_fista(data, LassoConfig(lam))
    kkt = kkt_residuals(data, res.coef, lam)
    assert res.converged
    assert kkt["zero"] <= 1e-6 and kkt["active"] <= 1e-6
    assert res.objective == pytest.approx(lasso_objective(MonomialDesign(data), data.y, res.coef, lam))


def test_support_recovery_nine_of_ten():
    d, n, sigma = 8, 120, 0.1
    lam = theoretical_lambda(sigma, d, n, 0.05)
    hits = 0
    for s in range(10):
        gt = gen_power_law(d, 3, 2, seed=s)
        res = lasso_fista(sample_dataset(gt, n, sigma, seed=100 + s), LassoConfig(lam))
        hits += set(res.spectrum.masks.tolist()) == set(gt.spectrum.masks.tolist())
    assert hits >= 9


def test_matrix_free_fista_matches_dense():
    data = sample_dataset(gen_power_law(8, 3, 2, seed=4), 100, 0.1, seed=5)
    lam = 0.05
    dense = lasso_fista(data, LassoConfig(lam))
    free = lasso_fista(data, LassoConfig(lam), budget=0)
    assert free.objective == pytest.approx(dense.objective, abs=1e-10)


def test_non_convergence_warns():
    data = sample_dataset(gen_power_law(8, 3, 2, seed=0), 100, 0.1, seed=0)
    with pytest.warns(LassoNotConverged):
        res = lasso_fista(data, LassoConfig(0.01, max_iters=3))
    assert not res.converged and res.n_iter == 3 and np.isfinite(res.objective)


def test_objective_monotone_after_restart():
    data = sample_dataset(gen_power_law(8, 3, 2, seed=3), 200, 0.1, seed=3)
    lam = 0.02
    prev = np.inf
    for iters in (5, 10, 20, 40, 80):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LassoNotConverged)
            f = lasso_fista(data, LassoConfig(lam, max_iters=iters)).objective
        assert f <= prev + 1e-15
        prev = f


def test_agreement_with_trainer():
    data = sample_dataset(gen_power_law(6, 3, 2, seed=0), 100, 0.1, seed=1)
    lam = theoretical_lambda(0.1, 6, 100, 0.05)
    fista = lasso_fista(data, LassoConfig(lam))
    rep = train(PolynomialModel(6), data, TrainConfig(lam=lam, learning_rate=5e-5, epochs=150_000,
                                                      average_tail=0.5, log_every=150_000))
    assert abs(rep.final_objective - fista.objective) <= 1e-5


def test_ols_examples():
    gt = gen_power_law(7, 4, 2, seed=6)
    data = sample_dataset(gt, 100, 0.0, seed=7)
    s = ordinary_least_squares(data, gt.spectrum.masks)
    np.testing.assert_allclose(s.coeffs, gt.spectrum.coeffs, atol=1e-8)
    mean_fit = ordinary_least_squares(data, [0])
    assert mean_fit.coeffs[0] == pytest.approx(data.y.mean(), rel=1e-9)
    with pytest.raises(ValueError):
        ordinary_least_squares(Dataset(data.X[:2], data.y[:2]), [0, 1, 2])


def test_ols_matches_small_lambda_lasso_on_support():
    gt = gen_power_law(7, 3, 2, seed=8)
    data = sample_dataset(gt, 150, 0.1, seed=9)
    support = gt.spectrum.masks
    ols = ordinary_least_squares(data, support)
    sub = Dataset(data.X, data.y)
    # LASSO restricted to the support: a polynomial model on exactly those masks
    rep = train(PolynomialModel(7, support), sub, TrainConfig(lam=1e-9, learning_rate=0.2, epochs=2000))
    np.testing.assert_allclose(rep.theta, ols.coeffs, atol=1e-6)


def test_lasso_config_validation():
    with pytest.raises(ValueError):
        LassoConfig(-0.1)
