"""Packed-domain distance estimation and top-k token selection.

The 1- and 2-bit kernels operate on whole ``uint16`` words with
SIMD-within-a-register tricks and never unpack to per-element arrays or
touch floating point. For 2-bit codes the even and odd lanes are split into
4-bit fields (``& 0x3333``) so each field has headroom for a
compare-and-subtract without borrowing into its neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BitsMismatchError, DimensionMismatchError, SelectionError
from .kv_cache import KvCache
from .quantizer import PackedCodes

METRICS = ("L1", "L2")

_M3333 = np.uint16(0x3333)
_M4444 = np.uint16(0x4444)
_M1111 = np.uint16(0x1111)
_M0F0F = np.uint16(0x0F0F)
_M5555 = np.uint16(0x5555)
_M00FF = np.uint16(0x00FF)


def _nibble_absdiff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-4-bit-field |a - b| for fields holding values 0..3."""
    d = (a | _M4444) - b  # 4 + a - b per field, never borrows
    ge = (d >> 2) & _M1111  # 1 where a >= b
    mask = (ge << 4) - ge  # 0xF in those fields (mod 2**16)
    hi = (a & mask) | (b & ~mask)
    lo = (b & mask) | (a & ~mask)
    return hi - lo


def _fold_bytes(x: np.ndarray) -> np.ndarray:
    """Sum the two bytes of each word."""
    return (x & _M00FF) + (x >> 8)


def _nibbles_to_bytes(x: np.ndarray) -> np.ndarray:
    return (x & _M0F0F) + ((x >> 4) & _M0F0F)


def popcount16(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint16)
    x = x - ((x >> 1) & _M5555)
    x = (x & _M3333) + ((x >> 2) & _M3333)
    x = (x + (x >> 4)) & _M0F0F
    return _fold_bytes(x)


def l1_words_2bit(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-word L1 distance between two arrays of 2-bit packed words."""
    a = np.asarray(a, dtype=np.uint16)
    b = np.asarray(b, dtype=np.uint16)
    even = _nibble_absdiff(a & _M3333, b & _M3333)
    odd = _nibble_absdiff((a >> 2) & _M3333, (b >> 2) & _M3333)
    return _fold_bytes(_nibbles_to_bytes(even + odd))


def _nibble_square(x: np.ndarray) -> np.ndarray:
    # x = 2*x1 + x0 with x in 0..3, so x*x = x0 + 4*x1 + 4*(x1 & x0)
    x0 = x & _M1111
    x1 = (x >> 1) & _M1111
    return x0 + ((x1 + (x0 & x1)) << 2)


def l2_words_2bit(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint16)
    b = np.asarray(b, dtype=np.uint16)
    even = _nibble_square(_nibble_absdiff(a & _M3333, b & _M3333))
    odd = _nibble_square(_nibble_absdiff((a >> 2) & _M3333, (b >> 2) & _M3333))
    return _fold_bytes(_nibbles_to_bytes(even) + _nibbles_to_bytes(odd))


def l1_words_1bit(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return popcount16(np.asarray(a, dtype=np.uint16) ^ np.asarray(b, dtype=np.uint16))


def distance_rows(q_words: np.ndarray, k_words: np.ndarray, bits: int, metric: str = "L1") -> np.ndarray:
    """Distances between stored code rows, broadcasting over leading axes.

    Reduces over the last (word) axis and returns ``int64``.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if bits == 2:
        per_word = l1_words_2bit(q_words, k_words) if metric == "L1" else l2_words_2bit(q_words, k_words)
    elif bits == 1:
        # |a - b| == (a - b)**2 for single bits
        per_word = l1_words_1bit(q_words, k_words)
    elif bits == 3:
        diff = np.asarray(q_words, dtype=np.int16) - np.asarray(k_words, dtype=np.int16)
        per_word = np.abs(diff) if metric == "L1" else diff * diff
    else:
        raise BitsMismatchError(f"unsupported code width {bits}")
    return per_word.sum(axis=-1, dtype=np.int64)


def _check_pair(q: PackedCodes, k: PackedCodes):
    if q.bits != k.bits:
        raise BitsMismatchError(f"code widths differ: {q.bits} vs {k.bits}")
    if q.length != k.length:
        raise DimensionMismatchError(f"code lengths differ: {q.length} vs {k.length}")


def manhattan_packed(q: PackedCodes, k: PackedCodes) -> int:
    _check_pair(q, k)
    return int(distance_rows(q.words, k.words, q.bits, "L1"))


def l2sq_packed(q: PackedCodes, k: PackedCodes) -> int:
    _check_pair(q, k)
    return int(distance_rows(q.words, k.words, q.bits, "L2"))


def score_all(q_code: PackedCodes, cache: KvCache, metric: str = "L1") -> np.ndarray:
    """Distance from the query code to every cached key code."""
    if q_code.bits != cache.bits:
        raise BitsMismatchError(f"query has {q_code.bits}-bit codes, cache stores {cache.bits}")
    if q_code.length != cache.head_dim:
        raise DimensionMismatchError(f"query code length {q_code.length} != head_dim {cache.head_dim}")
    if len(cache) == 0:
        return np.zeros(0, dtype=np.int64)
    return distance_rows(q_code.words, cache.code_words, cache.bits, metric)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise SelectionError("selection must be one-dimensional")
        if idx.size and (idx[0] < 0 or np.any(np.diff(idx) <= 0)):
            raise SelectionError("selection indices must be non-negative and strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return int(self.indices.size)

    def __contains__(self, i):
        pos = np.searchsorted(self.indices, i)
        return bool(pos < self.indices.size and self.indices[pos] == i)

    def __eq__(self, other):
        if not isinstance(other, SelectionResult):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def tolist(self) -> list[int]:
        return self.indices.tolist()


def smallest_k(values, k: int) -> np.ndarray:
    """Sorted indices of the ``k`` smallest values, ties going to the lower index.

    Linear time: partition to find the k-th value, keep everything strictly
    below it and fill the remainder with the earliest ties.
    """
    vals = np.asarray(values)
    n = vals.shape[0]
    if k < 1:
        raise SelectionError(f"budget must be >= 1, got {k}")
    if k >= n:
        return np.arange(n, dtype=np.int64)
    kth = np.partition(vals, k - 1)[k - 1]
    below = np.flatnonzero(vals < kth)
    ties = np.flatnonzero(vals == kth)[: k - below.size]
    return np.sort(np.concatenate((below, ties))).astype(np.int64)


def top_k(scores, k: int) -> SelectionResult:
    """Indices of the ``k`` smallest distances (largest negated similarity)."""
    return SelectionResult(smallest_k(scores, k))
