"""Append-only per-head KV cache that also stores packed key codes."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BitsMismatchError, DimensionMismatchError, SelectionError
from .quantizer import PackedCodes, code_bytes, kv_bytes, stored_width

SNAPSHOT_MAGIC = b"ADKV"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIB")


class KvCache:
    """Keys, values and packed key codes for one attention head.

    Storage grows by doubling. Views handed out by :attr:`keys`,
    :attr:`values` and :meth:`gather` stay valid after later appends because
    rows below the current length are never rewritten.
    """

    def __init__(self, head_dim: int, bits: int = 2, *, capacity: int = 16, dtype=np.float64):
        if head_dim < 1:
            raise DimensionMismatchError("head_dim must be positive")
        self.head_dim = int(head_dim)
        self.bits = int(bits)
        self.dtype = np.dtype(dtype)
        self._width = stored_width(self.head_dim, self.bits)
        self._code_dtype = np.uint8 if self.bits == 3 else np.uint16
        self._len = 0
        self._alloc(max(int(capacity), 1))

    def _alloc(self, capacity: int):
        keys = np.empty((capacity, self.head_dim), dtype=self.dtype)
        values = np.empty((capacity, self.head_dim), dtype=self.dtype)
        codes = np.empty((capacity, self._width), dtype=self._code_dtype)
        if self._len:
            keys[: self._len] = self._keys[: self._len]
            values[: self._len] = self._values[: self._len]
            codes[: self._len] = self._codes[: self._len]
        self._keys, self._values, self._codes = keys, values, codes

    def _reserve(self, extra: int):
        need = self._len + extra
        cap = self._keys.shape[0]
        if need > cap:
            while cap < need:
                cap *= 2
            self._alloc(cap)

    def __len__(self):
        return self._len

    @property
    def seq_len(self) -> int:
        return self._len

    @property
    def keys(self) -> np.ndarray:
        view = self._keys[: self._len]
        view.flags.writeable = False
        return view

    @property
    def values(self) -> np.ndarray:
        view = self._values[: self._len]
        view.flags.writeable = False
        return view

    @property
    def code_words(self) -> np.ndarray:
        """``(seq_len, words)`` array of stored code words."""
        view = self._codes[: self._len]
        view.flags.writeable = False
        return view

    def code(self, i: int) -> PackedCodes:
        if not 0 <= i < self._len:
            raise IndexError(i)
        return PackedCodes(self._codes[i].copy(), self.head_dim, self.bits)

    @property
    def codes(self) -> list[PackedCodes]:
        return [self.code(i) for i in range(self._len)]

    def update(self, k, v, code: PackedCodes) -> int:
        """Append one token and its key code; return the new length."""
        k = np.asarray(k, dtype=self.dtype)
        v = np.asarray(v, dtype=self.dtype)
        if k.shape != (self.head_dim,) or v.shape != (self.head_dim,):
            raise DimensionMismatchError(f"key/value must have shape ({self.head_dim},), got {k.shape} and {v.shape}")
        if code.bits != self.bits:
            raise BitsMismatchError(f"code has {code.bits} bits, cache stores {self.bits}")
        if code.length != self.head_dim:
            raise DimensionMismatchError(f"code length {code.length} != head_dim {self.head_dim}")
        self._reserve(1)
        n = self._len
        self._keys[n] = k
        self._values[n] = v
        self._codes[n] = code.words
        self._len = n + 1
        return self._len

    def extend(self, keys, values, code_words) -> int:
        """Append many tokens at once. ``code_words`` is the stored-row array."""
        keys = np.asarray(keys, dtype=self.dtype)
        values = np.asarray(values, dtype=self.dtype)
        code_words = np.asarray(code_words)
        m = keys.shape[0] if keys.ndim == 2 else -1
        if keys.shape != (m, self.head_dim) or values.shape != keys.shape:
            raise DimensionMismatchError("keys/values must be (n, head_dim) with matching shapes")
        if code_words.shape != (m, self._width):
            raise BitsMismatchError(f"code rows must have shape ({m}, {self._width}) for {self.bits}-bit codes")
        self._reserve(m)
        n = self._len
        self._keys[n : n + m] = keys
        self._values[n : n + m] = values
        self._codes[n : n + m] = code_words
        self._len = n + m
        return self._len

    def _check_indices(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise SelectionError("indices must be one-dimensional")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self._len:
                raise SelectionError(f"index out of range for cache of length {self._len}")
            if np.any(np.diff(idx) <= 0):
                raise SelectionError("indices must be strictly increasing")
        return idx

    def gather(self, indices) -> tuple[np.ndarray, np.ndarray]:
        idx = self._check_indices(indices)
        return self._keys[idx], self._values[idx]

    def code_overhead_ratio(self, element_bytes: int = 2) -> float:
        """Packed-code bytes over K+V bytes, with K/V accounted at ``element_bytes``."""
        return code_bytes(self.head_dim, self.bits) / kv_bytes(self.head_dim, element_bytes)

    def code_nbytes(self) -> int:
        return self._len * code_bytes(self.head_dim, self.bits)

    # -- snapshot format -------------------------------------------------

    def save(self, path) -> None:
        """Write the ADKV snapshot: header, f32 keys, f32 values, u16 code words."""
        header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self._len, self.head_dim, self.bits)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.keys, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(self.code_words, dtype="<u2").tobytes())

    @classmethod
    def load(cls, path) -> "KvCache":
        raw = Path(path).read_bytes()
        if len(raw) < _HEADER.size:
            raise ValueError("truncated snapshot header")
        magic, version, seq_len, head_dim, bits = _HEADER.unpack_from(raw)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        width = stored_width(head_dim, bits)
        off = _HEADER.size
        n_kv = seq_len * head_dim
        need = off + 8 * n_kv + 2 * seq_len * width
        if len(raw) != need:
            raise ValueError(f"snapshot size {len(raw)} != expected {need}")
        keys = np.frombuffer(raw, dtype="<f4", count=n_kv, offset=off).reshape(seq_len, head_dim)
        off += 4 * n_kv
        values = np.frombuffer(raw, dtype="<f4", count=n_kv, offset=off).reshape(seq_len, head_dim)
        off += 4 * n_kv
        words = np.frombuffer(raw, dtype="<u2", count=seq_len * width, offset=off).reshape(seq_len, width)
        cache = cls(head_dim, bits, capacity=max(seq_len, 1))
        if bits == 3 and words.size and words.max() > 7:
            raise ValueError("3-bit snapshot holds out-of-range codes")
        cache.extend(keys, values, words.astype(cache._code_dtype))
        return cache
