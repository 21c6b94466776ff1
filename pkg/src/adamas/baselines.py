"""Reference selection policies: sink+window, page min/max bounds, exact top-k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SelectionError
from .estimator import SelectionResult, smallest_k
from .kv_cache import KvCache

DEFAULT_PAGE_SIZE = 16


@dataclass(frozen=True)
class WindowPolicy:
    sink: int
    recent: int

    def __post_init__(self):
        if self.sink < 0 or self.recent < 0:
            raise SelectionError("sink and recent counts must be non-negative")

    @property
    def budget(self) -> int:
        return self.sink + self.recent

    @classmethod
    def for_budget(cls, budget: int, sink: int) -> "WindowPolicy":
        """Split a token budget into ``sink`` leading tokens and the rest recent."""
        s = min(sink, budget)
        return cls(s, budget - s)


def window_select(seq_len: int, policy: WindowPolicy) -> SelectionResult:
    head = np.arange(min(policy.sink, seq_len))
    tail = np.arange(max(seq_len - policy.recent, 0), seq_len)
    return SelectionResult(np.union1d(head, tail))


class PageSummaries:
    """Elementwise min/max of keys over fixed-size pages, built by appending."""

    def __init__(self, head_dim: int, page_size: int = DEFAULT_PAGE_SIZE):
        if page_size < 1:
            raise SelectionError("page_size must be >= 1")
        self.head_dim = head_dim
        self.page_size = page_size
        self.seq_len = 0
        self._mins: list[np.ndarray] = []
        self._maxs: list[np.ndarray] = []

    @classmethod
    def from_keys(cls, keys, page_size: int = DEFAULT_PAGE_SIZE) -> "PageSummaries":
        keys = np.asarray(keys, dtype=np.float64)
        pages = cls(keys.shape[1], page_size)
        n = keys.shape[0]
        full = n - n % page_size
        if full:
            blocks = keys[:full].reshape(-1, page_size, keys.shape[1])
            pages._mins.extend(blocks.min(axis=1))
            pages._maxs.extend(blocks.max(axis=1))
        if n > full:
            pages._mins.append(keys[full:].min(axis=0))
            pages._maxs.append(keys[full:].max(axis=0))
        pages.seq_len = n
        return pages

    def append(self, k) -> None:
        k = np.asarray(k, dtype=np.float64)
        if k.shape != (self.head_dim,):
            raise DimensionMismatchError(f"key must have shape ({self.head_dim},)")
        if self.seq_len % self.page_size == 0:
            self._mins.append(k.copy())
            self._maxs.append(k.copy())
        else:
            np.minimum(self._mins[-1], k, out=self._mins[-1])
            np.maximum(self._maxs[-1], k, out=self._maxs[-1])
        self.seq_len += 1

    @property
    def num_pages(self) -> int:
        return len(self._mins)

    @property
    def mins(self) -> np.ndarray:
        return np.array(self._mins).reshape(-1, self.head_dim)

    @property
    def maxs(self) -> np.ndarray:
        return np.array(self._maxs).reshape(-1, self.head_dim)

    def page_tokens(self, page: int) -> np.ndarray:
        start = page * self.page_size
        return np.arange(start, min(start + self.page_size, self.seq_len))


def page_bounds(q, mins, maxs) -> np.ndarray:
    """Channelwise upper bound of ``q . k`` over each page's min/max box.

    Uses the same last-axis ``np.sum`` reduction as :func:`rowwise_dot` so the
    bound holds exactly in floating point, not just in real arithmetic.
    """
    q = np.asarray(q, dtype=np.float64)
    return np.maximum(q * mins, q * maxs).sum(axis=-1)


def rowwise_dot(q, keys) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return (q * np.asarray(keys, dtype=np.float64)).sum(axis=-1)


def page_scores(q, pages: PageSummaries) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (pages.head_dim,):
        raise DimensionMismatchError(f"query must have shape ({pages.head_dim},)")
    return page_bounds(q, pages.mins, pages.maxs)


def pages_to_tokens(page_ids, page_size: int, seq_len: int) -> np.ndarray:
    page_ids = np.sort(np.asarray(page_ids, dtype=np.int64))
    tokens = (page_ids[:, None] * page_size + np.arange(page_size)).ravel()
    return tokens[tokens < seq_len]


def page_select(q, pages: PageSummaries, k: int, *, include_current_page: bool = False) -> SelectionResult:
    """Tokens of the ``k / page_size`` highest-bound pages.

    ``include_current_page`` forces the last (possibly partial) page in and
    spends one page of budget on it; off by default.
    """
    p = pages.page_size
    if k < p or k % p:
        raise SelectionError(f"token budget {k} is not a positive multiple of page_size {p}")
    if pages.num_pages == 0:
        return SelectionResult(np.zeros(0, dtype=np.int64))
    n_pages = k // p
    scores = page_scores(q, pages)
    if include_current_page:
        last = pages.num_pages - 1
        rest = np.delete(np.arange(pages.num_pages), last)
        chosen = rest[smallest_k(-scores[rest], n_pages - 1)] if n_pages > 1 and rest.size else rest[:0]
        chosen = np.append(chosen, last)
    else:
        chosen = smallest_k(-scores, n_pages)
    return SelectionResult(pages_to_tokens(chosen, p, pages.seq_len))


def oracle_select(q, cache: KvCache | np.ndarray, k: int) -> SelectionResult:
    """Exact dot-product top-k: the recall ground truth."""
    keys = cache.keys if isinstance(cache, KvCache) else np.asarray(cache, dtype=np.float64)
    dots = keys @ np.asarray(q, dtype=np.float64)
    return SelectionResult(smallest_k(-dots, k))


def recall(selected: SelectionResult, reference: SelectionResult) -> float:
    """Fraction of ``reference`` recovered by ``selected``."""
    if len(reference) == 0:
        return 1.0
    hit = np.intersect1d(selected.indices, reference.indices, assume_unique=True).size
    return hit / len(reference)
