import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adamas.baselines import (
    PageSummaries,
    WindowPolicy,
    oracle_select,
    page_scores,
    page_select,
    recall,
    rowwise_dot,
    window_select,
)
from adamas.errors import SelectionError
from adamas.estimator import SelectionResult


def test_window_examples():
    assert window_select(10, WindowPolicy(2, 2)).tolist() == [0, 1, 8, 9]
    assert window_select(3, WindowPolicy(2, 2)).tolist() == [0, 1, 2]


def test_window_long_sequence_matches_set_union():
    sel = window_select(10_000, WindowPolicy(4, 60))
    assert len(sel) == 64
    assert sel.tolist() == sorted(set(range(4)) | set(range(10_000 - 60, 10_000)))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500), st.integers(0, 40), st.integers(0, 200))
def test_window_matches_set_oracle(seq_len, sink, recent):
    got = window_select(seq_len, WindowPolicy(sink, recent)).tolist()
    assert got == sorted(set(range(min(sink, seq_len))) | set(range(max(seq_len - recent, 0), seq_len)))


def test_window_for_budget_split():
    assert WindowPolicy.for_budget(64, 4) == WindowPolicy(4, 60)
    assert WindowPolicy.for_budget(2, 4) == WindowPolicy(2, 0)


def test_single_key_page_bound_is_exact(rng):
    k, q = rng.standard_normal((2, 32))
    pages = PageSummaries.from_keys(k[None], 16)
    assert page_scores(q, pages)[0] == rowwise_dot(q, k)


def test_zero_query_scores_zero(rng):
    pages = PageSummaries.from_keys(rng.standard_normal((64, 16)), 16)
    np.testing.assert_array_equal(page_scores(np.zeros(16), pages), 0.0)


def test_append_matches_bulk_build(rng):
    K = rng.standard_normal((75, 8))
    bulk = PageSummaries.from_keys(K, 16)
    inc = PageSummaries(8, 16)
    for k in K:
        inc.append(k)
    assert inc.num_pages == bulk.num_pages == 5
    np.testing.assert_array_equal(inc.mins, bulk.mins)
    np.testing.assert_array_equal(inc.maxs, bulk.maxs)
    np.testing.assert_array_equal(bulk.page_tokens(4), np.arange(64, 75))


def test_page_bound_holds_exactly(rng):
    K = rng.standard_normal((10_000 * 4, 16)) * rng.lognormal(size=(1, 16))
    pages = PageSummaries.from_keys(K, 4)
    q = rng.standard_normal(16)
    bound = page_scores(q, pages)
    assert np.all(bound >= rowwise_dot(q, K).reshape(-1, 4).max(axis=1))


def sort_pages_oracle(q, K, p, k):
    bounds = [np.maximum(q * K[i : i + p].min(0), q * K[i : i + p].max(0)).sum() for i in range(0, len(K), p)]
    order = sorted(range(len(bounds)), key=lambda j: (-bounds[j], j))[: k // p]
    return sorted(t for j in order for t in range(j * p, min((j + 1) * p, len(K))))


def test_page_select_matches_sort_oracle(rng):
    K = rng.standard_normal((1000, 32))
    pages = PageSummaries.from_keys(K, 16)
    for _ in range(10):
        q = rng.standard_normal(32)
        assert page_select(q, pages, 64).tolist() == sort_pages_oracle(q, K, 16, 64)


def test_page_select_degenerate_budgets(rng):
    K = rng.standard_normal((16, 8))
    assert page_select(K[0], PageSummaries.from_keys(K, 16), 16).tolist() == list(range(16))
    K = rng.standard_normal((128, 8))
    assert page_select(K[0], PageSummaries.from_keys(K, 16), 128).tolist() == list(range(128))


def test_page_select_current_page(rng):
    K = rng.standard_normal((100, 8))
    sel = page_select(K[0], PageSummaries.from_keys(K, 16), 32, include_current_page=True)
    assert set(range(96, 100)) <= set(sel.tolist())


@pytest.mark.parametrize("k", [0, 8, 24])
def test_page_select_rejects_bad_budget(rng, k):
    with pytest.raises(SelectionError):
        page_select(np.zeros(8), PageSummaries.from_keys(rng.standard_normal((64, 8)), 16), k)


def test_oracle_examples(rng):
    K = rng.standard_normal((50, 16))
    q = rng.standard_normal(16)
    assert oracle_select(q, K, 50).tolist() == list(range(50))
    K[23] = 1e3 * q
    assert 23 in oracle_select(q, K, 1)
    dots = K @ q
    assert oracle_select(q, K, 10).tolist() == sorted(np.argsort(-dots, kind="stable")[:10].tolist())


def test_recall():
    assert recall(SelectionResult([1, 2, 3]), SelectionResult([2, 3, 4, 5])) == 0.5
    assert recall(SelectionResult([]), SelectionResult([])) == 1.0
