"""Token-level sparse attention selection with Hadamard-domain 2-bit codes.

Pipeline per decode step: Hadamard-transform the query and key, bucketize
into 2-bit codes, pack eight codes per 16-bit word, store the key codes in
the KV cache, rank cached keys by packed Manhattan distance, keep the top-k
and attend over them. Baseline selectors, an analytic cost model and a
benchmark harness live alongside.
"""

from .attention import AttentionOutput, full_attention, masked_attention, output_error, sparse_attention
from .baselines import (
    PageSummaries,
    WindowPolicy,
    oracle_select,
    page_scores,
    page_select,
    recall,
    window_select,
)
from .cost_model import (
    CostParams,
    CostReport,
    closed_form,
    flops_adamas,
    flops_full,
    flops_quest,
    memory_adamas,
    memory_full,
    memory_quest,
)
from .errors import AdamasError
from .estimator import SelectionResult, l2sq_packed, manhattan_packed, score_all, top_k
from .hadamard import HadamardSpec, fwht, hadamard_matrix
from .kv_cache import KvCache
from .pipeline import AdamasConfig, decode_step, encode, encode_rows, select
from .quantizer import (
    BucketThresholds,
    CodeVector,
    PackedCodes,
    bucketize,
    compute_thresholds,
    pack,
    store_codes,
    unpack,
)

__version__ = "0.1.0"

__all__ = [
    "AdamasConfig",
    "AdamasError",
    "AttentionOutput",
    "BucketThresholds",
    "CodeVector",
    "CostParams",
    "CostReport",
    "HadamardSpec",
    "KvCache",
    "PackedCodes",
    "PageSummaries",
    "SelectionResult",
    "WindowPolicy",
    "bucketize",
    "closed_form",
    "compute_thresholds",
    "decode_step",
    "encode",
    "encode_rows",
    "flops_adamas",
    "flops_full",
    "flops_quest",
    "full_attention",
    "fwht",
    "hadamard_matrix",
    "l2sq_packed",
    "manhattan_packed",
    "masked_attention",
    "memory_adamas",
    "memory_full",
    "memory_quest",
    "oracle_select",
    "output_error",
    "pack",
    "page_scores",
    "page_select",
    "recall",
    "score_all",
    "select",
    "sparse_attention",
    "store_codes",
    "top_k",
    "unpack",
    "window_select",
]
