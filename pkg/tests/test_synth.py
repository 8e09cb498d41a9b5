import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specbool.hypercube import eval_spectrum
from specbool.synth import (gen_monomial, gen_power_law, gen_staircase, qg_preset, read_dataset_csv,
                            sample_dataset, write_dataset_csv)


def _subset(a, b):
    return a & b == a


def test_monomial_examples():
    gt = gen_monomial(13, 3, seed=5)
    assert gt.k == 1 and gt.spectrum.orders.tolist() == [3]
    assert gt.spectrum.coeffs.tolist() == [1.0]
    assert gen_monomial(6, 6, seed=0).spectrum.masks.tolist() == [63]
    assert gen_monomial(13, 3, seed=5).spectrum.masks.tolist() == gt.spectrum.masks.tolist()
    with pytest.raises(ValueError):
        gen_monomial(5, 0)
    with pytest.raises(ValueError):
        gen_monomial(5, 6)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 10 ** 6), st.data())
def test_monomial_order_property(d, seed, data):
    order = data.draw(st.integers(1, d))
    gt = gen_monomial(d, order, seed=seed)
    assert len(gt.spectrum) == 1 and int(gt.spectrum.orders[0]) == order


def test_power_law_examples():
    gt = gen_power_law(13, 10, 2, seed=1)
    assert gt.k == 10 and set(gt.spectrum.orders.tolist()) == {2}
    mags = sorted(np.abs(gt.spectrum.coeffs), reverse=True)
    np.testing.assert_allclose(mags, 1.0 / np.arange(1, 11), rtol=1e-15)
    flat = gen_power_law(8, 5, 2, exponent=0.0, seed=2)
    np.testing.assert_array_equal(np.abs(flat.spectrum.coeffs), 1.0)
    one = gen_power_law(8, 1, 3, seed=3)
    assert one.k == 1 and abs(one.spectrum.coeffs[0]) == 1.0 and one.spectrum.orders[0] == 3
    with pytest.raises(ValueError):
        gen_power_law(4, 7, 2)  # only C(4,2) = 6 masks exist


def test_power_law_large_dimension():
    gt = gen_power_law(24, 50, 4, seed=0)
    assert gt.k == 50 and set(gt.spectrum.orders.tolist()) == {4}


@pytest.mark.parametrize("seed", range(20))
def test_staircase_structure(seed):
    gt = gen_staircase(13, seed=seed)
    s = gt.spectrum
    assert len(s) == 18
    orders = s.orders
    assert sorted(orders.tolist()) == [1] * 3 + [2] * 6 + [3] * 9
    singles = s.masks[orders == 1]
    pairs = s.masks[orders == 2]
    triples = s.masks[orders == 3]
    for m in pairs:
        assert sum(_subset(int(a), int(m)) for a in singles) == 1
    for m in triples:
        assert any(_subset(int(p), int(m)) for p in pairs)
    coeff = dict(zip(s.masks.tolist(), s.coeffs.tolist()))
    assert {coeff[int(m)] for m in singles} == {1.0}
    assert {coeff[int(m)] for m in pairs} == {0.7}
    assert {coeff[int(m)] for m in triples} == {0.7 ** 2}


def test_staircase_flat_profile_and_limits():
    s = gen_staircase(10, seed=0, ratio=1.0).spectrum
    np.testing.assert_array_equal(s.coeffs, 1.0)
    with pytest.raises(ValueError):
        gen_staircase(4)


def test_qg_preset():
    gt = qg_preset()
    assert gt.d == 13
    x = np.ones((1, 13))
    assert gt(x)[0] == 13.0
    x[0, 0] = -1
    x[0, 11] = -1
    assert gt(x)[0] == -3 + 4 + 5 - 1
    assert gt.spectrum.as_dict() == {1: 3.0, 6: 4.0, 24: 5.0, 2048: 1.0}


def test_sample_noiseless_labels():
    gt = gen_power_law(9, 4, 2, seed=0)
    data = sample_dataset(gt, 300, 0.0, seed=1)
    np.testing.assert_array_equal(data.y, eval_spectrum(gt.spectrum, data.X))
    assert data.n == 300 and data.d == 9


def test_sample_noise_statistics():
    gt = gen_monomial(6, 2, seed=0)
    sigma, n = 0.5, 100_000
    data = sample_dataset(gt, n, sigma, seed=3)
    noise = data.y - gt(data.X)
    assert abs(noise.mean()) <= 4 * sigma / np.sqrt(n)
    assert abs(noise.var() - sigma ** 2) <= 0.1 * sigma ** 2


def test_sample_without_replacement():
    gt = gen_monomial(5, 2, seed=0)
    data = sample_dataset(gt, 32, 0.0, seed=0, replace=False)
    assert len({tuple(r) for r in data.X}) == 32
    with pytest.raises(ValueError):
        sample_dataset(gt, 33, 0.0, replace=False)
    with pytest.raises(ValueError):
        sample_dataset(gt, 0, 0.1)
    with pytest.raises(ValueError):
        sample_dataset(gt, 10, -0.1)


def test_sampling_reproducible():
    gt = gen_monomial(8, 3, seed=0)
    a, b = sample_dataset(gt, 50, 0.1, seed=9), sample_dataset(gt, 50, 0.1, seed=9)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)


def test_dataset_csv_round_trip(tmp_path):
    data = sample_dataset(gen_power_law(5, 3, 2, seed=1), 40, 0.2, seed=2)
    write_dataset_csv(tmp_path / "d.csv", data)
    text = (tmp_path / "d.csv").read_text().splitlines()
    assert text[0] == "x_1,x_2,x_3,x_4,x_5,y"
    assert set(text[1].split(",")[:5]) <= {"1", "-1"}
    back = read_dataset_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.y, data.y)


def test_dataset_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,y\n1,1,0.5\n")
    with pytest.raises(ValueError):
        read_dataset_csv(p)
    p.write_text("x_1,y\n2,0.5\n")
    with pytest.raises(ValueError):
        read_dataset_csv(p)
