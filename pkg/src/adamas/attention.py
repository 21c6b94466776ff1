"""Dense single-query attention and its sparse (selected-subset) variant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SelectionError
from .estimator import SelectionResult
from .kv_cache import KvCache

OUTPUT_ERROR_EPS = 1e-30


@dataclass(frozen=True, eq=False)
class AttentionOutput:
    out: np.ndarray
    weights: np.ndarray | None = None


def softmax_weights(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def full_attention(q, K, V, *, return_weights: bool = False) -> AttentionOutput:
    """softmax(q K^T / sqrt(d)) V for a single query, accumulated in float64."""
    q = np.asarray(q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if K.ndim != 2 or V.ndim != 2 or K.shape[0] == 0:
        raise DimensionMismatchError("attention needs at least one key/value row")
    if K.shape[0] != V.shape[0] or K.shape[1] != q.shape[-1]:
        raise DimensionMismatchError(f"shape mismatch: q {q.shape}, K {K.shape}, V {V.shape}")
    d = q.shape[-1]
    w = softmax_weights((K @ q) / math.sqrt(d))
    return AttentionOutput(w @ V, w if return_weights else None)


def sparse_attention(q, cache: KvCache, sel: SelectionResult, *, return_weights: bool = False) -> AttentionOutput:
    """Attention renormalised over the selected tokens only."""
    if len(sel) == 0:
        raise SelectionError("empty selection")
    K_s, V_s = cache.gather(sel.indices)
    return full_attention(q, K_s, V_s, return_weights=return_weights)


def masked_attention(dots: np.ndarray, V: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Batched sparse attention expressed as a mask over all cached tokens.

    ``dots`` holds raw ``q . k`` products, shape ``(queries, seq_len)``; row
    ``i`` of the result equals ``sparse_attention`` over the tokens where
    ``mask[i]`` is set. The softmax shift uses the max over selected logits.
    """
    d = V.shape[1]
    logits = np.where(mask, dots / math.sqrt(d), -np.inf)
    if not np.all(mask.any(axis=1)):
        raise SelectionError("empty selection")
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return (e @ V) / e.sum(axis=1, keepdims=True)


def output_error(approx, exact) -> float:
    """Relative L2 error ``|approx - exact| / max(|exact|, 1e-30)``."""
    a = approx.out if isinstance(approx, AttentionOutput) else np.asarray(approx, dtype=np.float64)
    e = exact.out if isinstance(exact, AttentionOutput) else np.asarray(exact, dtype=np.float64)
    if a.shape != e.shape:
        raise DimensionMismatchError(f"output shapes differ: {a.shape} vs {e.shape}")
    return float(np.linalg.norm(a - e) / max(float(np.linalg.norm(e)), OUTPUT_ERROR_EPS))
