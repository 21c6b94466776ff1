import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adamas.errors import BitsMismatchError, SelectionError
from adamas.estimator import (
    SelectionResult,
    distance_rows,
    l2sq_packed,
    manhattan_packed,
    popcount16,
    score_all,
    top_k,
)
from adamas.kv_cache import KvCache
from adamas.pipeline import encode, encode_rows
from adamas.quantizer import CodeVector, pack, pack_rows, store_codes


def packed(codes, bits=2):
    return pack(CodeVector(np.asarray(codes), bits))


def test_manhattan_small_example():
    assert manhattan_packed(packed([0, 1, 2, 3]), packed([3, 2, 1, 0])) == 8


def test_l2_small_example():
    assert l2sq_packed(packed([0, 3]), packed([3, 0])) == 18


def test_identical_codes_have_zero_distance(rng):
    p = packed(rng.integers(0, 4, 128))
    assert manhattan_packed(p, p) == 0
    assert l2sq_packed(p, p) == 0


def test_popcount_exhaustive():
    words = np.arange(1 << 16, dtype=np.uint16)
    expected = np.array([bin(w).count("1") for w in range(1 << 16)])
    np.testing.assert_array_equal(popcount16(words), expected)


@pytest.mark.parametrize("bits", [1, 2])
def test_kernels_match_unpacked_oracle(bits):
    rng = np.random.default_rng(bits)
    a = rng.integers(0, 1 << bits, (20_000, 128))
    b = rng.integers(0, 1 << bits, (20_000, 128))
    wa, wb = pack_rows(a, bits), pack_rows(b, bits)
    np.testing.assert_array_equal(distance_rows(wa, wb, bits, "L1"), np.abs(a - b).sum(axis=1))
    np.testing.assert_array_equal(distance_rows(wa, wb, bits, "L2"), ((a - b) ** 2).sum(axis=1))


@pytest.mark.parametrize("partner", [0, 0xFFFF, 58395, 0x5555, 0xAAAA, 0x1B1B])
def test_two_bit_word_kernels_exhaustive(partner):
    words = np.arange(1 << 16, dtype=np.uint16)[:, None]
    codes = ((words >> (2 * np.arange(8))) & 3).astype(int)
    ref = np.array([(partner >> (2 * j)) & 3 for j in range(8)])
    other = np.full_like(words, partner)
    np.testing.assert_array_equal(distance_rows(words, other, 2, "L1"), np.abs(codes - ref).sum(axis=1))
    np.testing.assert_array_equal(distance_rows(words, other, 2, "L2"), ((codes - ref) ** 2).sum(axis=1))


def test_three_bit_codes_use_unpacked_distance(rng):
    a, b = rng.integers(0, 8, (2, 128))
    qa, qb = store_codes(CodeVector(a, 3)), store_codes(CodeVector(b, 3))
    assert manhattan_packed(qa, qb) == np.abs(a - b).sum()
    assert l2sq_packed(qa, qb) == ((a - b) ** 2).sum()


def test_mixed_widths_rejected():
    with pytest.raises(BitsMismatchError):
        manhattan_packed(packed([0] * 8, 2), packed([0] * 16, 1))


def test_score_all_zero_at_own_position(rng):
    K = rng.standard_normal((50, 64))
    cache = KvCache(64)
    cache.extend(K, K, encode_rows(K))
    scores = score_all(encode(K[17]), cache)
    assert scores[17] == 0


def test_score_all_single_and_empty(rng):
    q, k = rng.standard_normal((2, 64))
    cache = KvCache(64)
    assert score_all(encode(q), cache).size == 0
    cache.update(k, k, encode(k))
    assert score_all(encode(q), cache).tolist() == [manhattan_packed(encode(q), encode(k))]


def test_score_all_matches_looped_oracle(rng):
    K = rng.standard_normal((4096, 128))
    cache = KvCache(128)
    cache.extend(K, K, encode_rows(K))
    q = encode(rng.standard_normal(128))
    looped = [manhattan_packed(q, cache.code(i)) for i in range(0, 4096, 7)]
    np.testing.assert_array_equal(score_all(q, cache)[::7], looped)


def test_top_k_examples():
    assert top_k([5, 1, 9, 1], 2).tolist() == [1, 3]
    assert top_k([1, 1, 1], 2).tolist() == [0, 1]
    assert top_k([4, 2], 5).tolist() == [0, 1]


def test_top_k_rejects_non_positive_budget():
    with pytest.raises(SelectionError):
        top_k([1, 2, 3], 0)


def test_top_k_matches_sort_oracle(rng):
    scores = rng.integers(0, 300, 10_000)
    oracle = np.sort(np.argsort(scores, kind="stable")[:64])
    np.testing.assert_array_equal(top_k(scores, 64).indices, oracle)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=200), st.integers(1, 250))
def test_top_k_properties(scores, k):
    sel = top_k(scores, k).indices
    arr = np.asarray(scores)
    assert sel.size == min(k, arr.size)
    assert np.all(np.diff(sel) > 0)
    rest = np.setdiff1d(np.arange(arr.size), sel)
    if rest.size:
        assert arr[sel].max() <= arr[rest].min()
    np.testing.assert_array_equal(sel, np.sort(np.argsort(arr, kind="stable")[: sel.size]))


def test_selection_result_membership():
    sel = SelectionResult([1, 4, 9])
    assert 4 in sel and 5 not in sel
    with pytest.raises(SelectionError):
        SelectionResult([3, 2])
