import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import hadamard as scipy_hadamard

from hcmlink.errors import SizeError
from hcmlink.hadamard import DENSE_LIMIT, BinaryHadamard, cyclic_shift, fwht, sylvester


def test_sylvester_base_case():
    assert sylvester(0).rows.tolist() == [[1]]


def test_sylvester_order_two():
    assert sylvester(1).rows.tolist() == [[1, 1], [1, 0]]


def test_sylvester_bipolar_orthogonality():
    b = sylvester(3).bipolar
    assert_allclose(b @ b.T, 8 * np.eye(8))


def test_sylvester_invariants():
    for k in range(1, 7):
        h = sylvester(k)
        rows = h.rows
        n = h.n
        assert rows[0].sum() == n and rows[:, 0].sum() == n
        assert np.array_equal(rows, rows.T)
        # every row but the first has exactly n/2 ones
        assert np.array_equal(rows[1:].sum(axis=1), np.full(n - 1, n // 2))
        assert rows.sum() == n * n // 2 + n // 2


def test_sylvester_order_out_of_range():
    with pytest.raises(SizeError):
        sylvester(-1)
    with pytest.raises(SizeError):
        sylvester(17)


def test_dense_rows_limited():
    big = sylvester(9)
    with pytest.raises(SizeError):
        _ = big.rows


def test_fwht_unit_vector_gives_ones():
    assert_allclose(fwht(np.eye(4)[0]), np.ones(4))


def test_fwht_involution_scales_by_n():
    rng = np.random.default_rng(0)
    v = rng.normal(size=8)
    assert_allclose(fwht(fwht(v)), 8 * v, atol=1e-12)


def test_fwht_matches_dense_multiply():
    rng = np.random.default_rng(1)
    v = rng.normal(size=16)
    b = sylvester(4).bipolar
    assert np.abs(fwht(v) - b @ v).max() < 1e-12


@pytest.mark.parametrize("k", range(1, 11))
def test_fwht_agrees_with_scipy_hadamard(k):
    # independent oracle: scipy's Sylvester construction
    rng = np.random.default_rng(k)
    n = 1 << k
    v = rng.uniform(-1, 1, size=n)
    assert np.abs(fwht(v) - scipy_hadamard(n) @ v).max() < 1e-10


def test_fwht_linearity():
    rng = np.random.default_rng(2)
    u, v = rng.normal(size=(2, 32))
    a, b = 0.37, -1.9
    assert_allclose(fwht(a * u + b * v), a * fwht(u) + b * fwht(v), atol=1e-10)


def test_fwht_batched_matches_loop():
    rng = np.random.default_rng(3)
    batch = rng.normal(size=(5, 16))
    out = fwht(batch)
    for row_in, row_out in zip(batch, out):
        assert_allclose(fwht(row_in), row_out)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(SizeError):
        fwht(np.zeros(6))


def test_cyclic_shift_examples():
    v = np.array([1, 2, 3, 4])
    assert cyclic_shift(v, 1).tolist() == [4, 1, 2, 3]
    assert cyclic_shift(v, 4).tolist() == [1, 2, 3, 4]
    assert cyclic_shift(v, -1).tolist() == [2, 3, 4, 1]
    assert cyclic_shift(v, 0).tolist() == [1, 2, 3, 4]
