"""Threshold bucketization and 16-bit word packing of Hadamard-domain vectors.

Codes are produced by counting how many thresholds a value strictly exceeds,
so ties land in the lower bucket. 1- and 2-bit codes are packed
little-endian into ``uint16`` words (element ``i`` of a word sits at bits
``[bits*i, bits*(i+1))``). 3-bit codes are an ablation-only width and are
kept one byte per element.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .errors import BitsMismatchError, DegenerateScaleError, DimensionMismatchError, PackingError

SUPPORTED_BITS = (1, 2, 3)
PACKABLE_BITS = (1, 2)
WORD_BITS = 16


@lru_cache(maxsize=None)
def unit_quantiles(bits: int) -> tuple[float, ...]:
    """Standard-normal quantiles splitting the line into 2**bits equiprobable buckets."""
    _check_bits(bits)
    levels = 1 << bits
    return tuple(float(norm.ppf(i / levels)) for i in range(1, levels))


def _check_bits(bits: int, allowed=SUPPORTED_BITS):
    if bits not in allowed:
        raise BitsMismatchError(f"unsupported code width {bits!r}; expected one of {allowed}")


@dataclass(frozen=True)
class BucketThresholds:
    bits: int
    thresholds: tuple[float, ...]

    def __post_init__(self):
        _check_bits(self.bits)
        t = tuple(float(v) for v in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        if len(t) != (1 << self.bits) - 1:
            raise ValueError(f"{self.bits}-bit buckets need {(1 << self.bits) - 1} thresholds, got {len(t)}")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly increasing")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.thresholds, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class CodeVector:
    codes: np.ndarray
    bits: int

    def __post_init__(self):
        _check_bits(self.bits)
        codes = np.asarray(self.codes)
        if codes.ndim != 1:
            raise DimensionMismatchError("CodeVector holds a single vector")
        if codes.size and (codes.min() < 0 or codes.max() >= (1 << self.bits)):
            raise ValueError(f"codes out of range for {self.bits}-bit width")
        codes = codes.astype(np.uint8)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    def __len__(self):
        return int(self.codes.shape[0])

    def __eq__(self, other):
        if not isinstance(other, CodeVector):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.codes, other.codes)


@dataclass(frozen=True, eq=False)
class PackedCodes:
    """Packed code words for one vector.

    ``words`` is ``uint16`` for bits in {1, 2} and ``uint8`` (one code per
    element, unpacked) for bits == 3. ``length`` is the logical element count
    before padding.
    """

    words: np.ndarray
    length: int
    bits: int

    def __post_init__(self):
        _check_bits(self.bits)
        words = np.asarray(self.words)
        expected = stored_width(self.length, self.bits)
        if words.shape != (expected,):
            raise PackingError(f"expected {expected} stored words for d={self.length}, bits={self.bits}; got shape {words.shape}")
        words = words.astype(np.uint8 if self.bits == 3 else np.uint16)
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @property
    def nbytes(self) -> int:
        return int(self.words.nbytes)

    def __eq__(self, other):
        if not isinstance(other, PackedCodes):
            return NotImplemented
        return (self.bits, self.length) == (other.bits, other.length) and np.array_equal(self.words, other.words)


def per_word(bits: int) -> int:
    _check_bits(bits, PACKABLE_BITS)
    return WORD_BITS // bits


def stored_width(d: int, bits: int) -> int:
    """Number of stored elements (words, or bytes for 3-bit) for a d-dim vector."""
    if bits == 3:
        return d
    epw = per_word(bits)
    return -(-d // epw)


def compute_thresholds(x, bits: int) -> BucketThresholds:
    """RMS-scaled normal quantiles for a single vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot compute thresholds of an empty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains NaN or Inf")
    _check_bits(bits)
    rms = float(np.sqrt(np.mean(arr * arr)))
    if rms == 0.0:
        raise DegenerateScaleError("all-zero vector has no scale for thresholds")
    return BucketThresholds(bits, tuple(rms * q for q in unit_quantiles(bits)))


def threshold_rows(x: np.ndarray, bits: int) -> np.ndarray:
    """Vectorised :func:`compute_thresholds`: one threshold set per row of ``x``."""
    arr = np.asarray(x, dtype=np.float64)
    rms = np.sqrt(np.mean(arr * arr, axis=-1, keepdims=True))
    if np.any(rms == 0.0):
        raise DegenerateScaleError("all-zero row has no scale for thresholds")
    return rms * np.asarray(unit_quantiles(bits))


def bucketize(x, t: BucketThresholds | np.ndarray) -> np.ndarray | CodeVector:
    """Count the thresholds each element strictly exceeds.

    With a :class:`BucketThresholds` and a 1-D input this returns a
    :class:`CodeVector`. Given a raw threshold array of shape ``(..., m)``
    (one set per row) it broadcasts over rows and returns a ``uint8`` array.
    """
    arr = np.asarray(x, dtype=np.float64)
    if isinstance(t, BucketThresholds):
        codes = (arr[..., None] > t.as_array()).sum(axis=-1).astype(np.uint8)
        if arr.ndim == 1:
            return CodeVector(codes, t.bits)
        return codes
    thr = np.asarray(t, dtype=np.float64)
    return (arr[..., None] > thr[..., None, :]).sum(axis=-1).astype(np.uint8)


def _pad_to(codes: np.ndarray, multiple: int) -> np.ndarray:
    rem = (-codes.shape[-1]) % multiple
    if rem == 0:
        return codes
    pad = [(0, 0)] * (codes.ndim - 1) + [(0, rem)]
    return np.pad(codes, pad, constant_values=0)


def pack_rows(codes: np.ndarray, bits: int, *, pad: bool = True) -> np.ndarray:
    """Pack the last axis of an integer code array into ``uint16`` words."""
    epw = per_word(bits)
    codes = np.asarray(codes)
    if codes.shape[-1] % epw:
        if not pad:
            raise PackingError(f"length {codes.shape[-1]} is not a multiple of {epw}")
        codes = _pad_to(codes, epw)
    grouped = codes.astype(np.uint16).reshape(*codes.shape[:-1], -1, epw)
    shifts = (np.arange(epw, dtype=np.uint16) * bits).astype(np.uint16)
    return np.bitwise_or.reduce(grouped << shifts, axis=-1).astype(np.uint16)


def unpack_rows(words: np.ndarray, bits: int, length: int | None = None) -> np.ndarray:
    epw = per_word(bits)
    words = np.asarray(words, dtype=np.uint16)
    shifts = (np.arange(epw, dtype=np.uint16) * bits).astype(np.uint16)
    mask = np.uint16((1 << bits) - 1)
    codes = ((words[..., None] >> shifts) & mask).astype(np.uint8)
    codes = codes.reshape(*words.shape[:-1], -1)
    if length is not None:
        codes = codes[..., :length]
    return codes


def pack(c: CodeVector, *, pad: bool = True) -> PackedCodes:
    if c.bits == 3:
        raise PackingError("3-bit codes are stored unpacked; use store_codes()")
    words = pack_rows(c.codes, c.bits, pad=pad)
    return PackedCodes(words, len(c), c.bits)


def unpack(p: PackedCodes) -> CodeVector:
    if p.bits == 3:
        return CodeVector(p.words.copy(), 3)
    return CodeVector(unpack_rows(p.words, p.bits, p.length), p.bits)


def store_codes(c: CodeVector) -> PackedCodes:
    """Storage form of any supported width: packed for 1/2 bits, bytes for 3."""
    if c.bits == 3:
        return PackedCodes(c.codes.copy(), len(c), 3)
    return pack(c)


def store_rows(codes: np.ndarray, bits: int) -> np.ndarray:
    if bits == 3:
        return np.asarray(codes, dtype=np.uint8)
    return pack_rows(codes, bits)


def code_bytes(d: int, bits: int) -> int:
    """Bytes occupied by one vector's stored codes."""
    return stored_width(d, bits) * (1 if bits == 3 else 2)


def kv_bytes(d: int, element_bytes: int = 2) -> int:
    """Bytes of one key plus one value row at the given element width."""
    return 2 * d * element_bytes
