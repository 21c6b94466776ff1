import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adamas.errors import DimensionMismatchError, NotPowerOfTwoError
from adamas.hadamard import HadamardSpec, OpCounter, fwht, hadamard_matrix

SQRT2 = math.sqrt(2.0)


def naive_sylvester(d, normalized=True):
    """Entry (i, j) of the Sylvester matrix is (-1)**popcount(i & j)."""
    idx = np.arange(d)
    signs = np.array([[(-1) ** bin(i & j).count("1") for j in idx] for i in idx], dtype=float)
    return signs / math.sqrt(d) if normalized else signs


def test_first_column_of_h2():
    np.testing.assert_allclose(fwht([1.0, 0.0]), [1 / SQRT2, 1 / SQRT2], atol=1e-15)


def test_constant_vector_projects_onto_first_row():
    np.testing.assert_allclose(fwht([1.0, 1.0, 1.0, 1.0]), [2.0, 0.0, 0.0, 0.0], atol=1e-15)


def test_two_by_two_against_matrix_product():
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / SQRT2
    expected = np.array([3.0, -1.0]) @ h2
    np.testing.assert_allclose(expected, [SQRT2, 2 * SQRT2])
    np.testing.assert_allclose(fwht([3.0, -1.0]), expected, atol=1e-15)


def test_unnormalized_transform_is_integer_butterfly():
    y = fwht([3.0, -1.0, 2.0, 0.0], HadamardSpec(4, normalized=False))
    np.testing.assert_array_equal(y, [4.0, 6.0, 0.0, 2.0])


def test_matrix_h2_normalized_and_not():
    np.testing.assert_allclose(hadamard_matrix(HadamardSpec(2)), np.array([[1, 1], [1, -1]]) / SQRT2)
    np.testing.assert_array_equal(hadamard_matrix(HadamardSpec(2, normalized=False)), [[1, 1], [1, -1]])


def test_matrix_h4_is_kronecker_of_h2():
    h2 = np.array([[1, 1], [1, -1]]) / SQRT2
    h4 = hadamard_matrix(4)
    np.testing.assert_allclose(h4, np.kron(h2, h2))
    np.testing.assert_allclose(np.abs(h4), 0.5, rtol=0, atol=1e-15)


@pytest.mark.parametrize("d", [2, 4, 8, 16, 32, 64, 128, 256])
@pytest.mark.parametrize("normalized", [True, False])
def test_matrix_matches_sylvester_sign_rule(d, normalized):
    np.testing.assert_allclose(hadamard_matrix(HadamardSpec(d, normalized)), naive_sylvester(d, normalized), atol=1e-12)


@pytest.mark.parametrize("d", [2, 4, 8, 16, 32, 64, 128, 256])
def test_fwht_matches_explicit_matrix(rng, d):
    x = rng.standard_normal((5, d))
    np.testing.assert_allclose(fwht(x), x @ hadamard_matrix(d), rtol=0, atol=1e-10)
    H = hadamard_matrix(d)
    np.testing.assert_allclose(H, H.T)


@pytest.mark.parametrize("d", [2, 16, 128, 1024])
def test_op_count_is_d_log_d(d):
    counter = OpCounter()
    fwht(np.ones(d), counter=counter)
    assert counter.ops == d * int(math.log2(d))
    assert counter.adds == counter.subs


def test_op_count_scales_with_batch_rows():
    counter = OpCounter()
    fwht(np.ones((3, 8)), counter=counter)
    assert counter.ops == 3 * 8 * 3


def test_input_is_not_modified(rng):
    x = rng.standard_normal(64)
    before = x.copy()
    fwht(x)
    np.testing.assert_array_equal(x, before)


@pytest.mark.parametrize("d", [32, 64, 128])
def test_orthogonality_preserves_dot_products(rng, d):
    q, k = rng.standard_normal((2, 200, d))
    ref = np.einsum("ij,ij->i", q, k)
    got = np.einsum("ij,ij->i", fwht(q), fwht(k))
    assert np.all(np.abs(got - ref) / np.abs(ref) < 1e-8)


vectors = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, 1 << n, elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False))
)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_involution_and_parseval(x):
    y = fwht(x)
    scale = max(1.0, float(np.max(np.abs(x))))
    np.testing.assert_allclose(fwht(y), x, rtol=0, atol=1e-10 * scale)
    assert abs(np.linalg.norm(y) - np.linalg.norm(x)) <= 1e-10 * max(1.0, np.linalg.norm(x))


@pytest.mark.parametrize("d", [0, 1, 3, 6, 12, 100])
def test_rejects_non_power_of_two(d):
    with pytest.raises(NotPowerOfTwoError):
        HadamardSpec(d)


def test_rejects_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        fwht(np.ones(4), HadamardSpec(8))


def test_rejects_non_power_of_two_vector():
    with pytest.raises(NotPowerOfTwoError):
        fwht(np.ones(6))


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        fwht([1.0, np.nan])
