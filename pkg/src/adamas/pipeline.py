"""End-to-end decode step: transform, bucketize, pack, cache, estimate, select, attend."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import AttentionOutput, sparse_attention
from .errors import ConfigError
from .estimator import METRICS, SelectionResult, score_all, top_k
from .hadamard import HadamardSpec, fwht
from .kv_cache import KvCache
from .quantizer import (
    SUPPORTED_BITS,
    BucketThresholds,
    PackedCodes,
    bucketize,
    store_rows,
    threshold_rows,
)


@dataclass(frozen=True)
class AdamasConfig:
    bits: int = 2
    metric: str = "L1"
    with_hadamard: bool = True
    normalized: bool = True
    # global thresholds instead of per-vector RMS scaling
    fixed_thresholds: BucketThresholds | None = None

    def __post_init__(self):
        if self.bits not in SUPPORTED_BITS:
            raise ConfigError(f"bits must be one of {SUPPORTED_BITS}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        if self.fixed_thresholds is not None and self.fixed_thresholds.bits != self.bits:
            raise ConfigError("fixed thresholds have a different bit width")


def encode_rows(x, cfg: AdamasConfig = AdamasConfig()) -> np.ndarray:
    """Stored code rows for a vector or a ``(n, d)`` block."""
    arr = np.asarray(x, dtype=np.float64)
    if cfg.with_hadamard:
        arr = fwht(arr, HadamardSpec(arr.shape[-1], cfg.normalized))
    if cfg.fixed_thresholds is not None:
        thr = np.broadcast_to(cfg.fixed_thresholds.as_array(), arr.shape[:-1] + (len(cfg.fixed_thresholds.thresholds),))
    else:
        thr = threshold_rows(arr, cfg.bits)
    return store_rows(bucketize(arr, thr), cfg.bits)


def encode(x, cfg: AdamasConfig = AdamasConfig()) -> PackedCodes:
    arr = np.asarray(x, dtype=np.float64)
    return PackedCodes(encode_rows(arr, cfg), arr.shape[-1], cfg.bits)


def select(q, cache: KvCache, budget: int, cfg: AdamasConfig = AdamasConfig()) -> SelectionResult:
    return top_k(score_all(encode(q, cfg), cache, cfg.metric), budget)


def decode_step(q, k, v, cache: KvCache, budget: int, cfg: AdamasConfig = AdamasConfig()) -> tuple[AttentionOutput, SelectionResult]:
    """One decode step: append (k, v) to the cache, then attend sparsely with q.

    The cache is updated before estimation, so the current token is always a
    candidate.
    """
    if cache.bits != cfg.bits:
        raise ConfigError(f"cache stores {cache.bits}-bit codes, config asks for {cfg.bits}")
    cache.update(k, v, encode(k, cfg))
    sel = select(q, cache, budget, cfg)
    return sparse_attention(q, cache, sel), sel
