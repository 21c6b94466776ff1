"""Quick oracle-equivalence checks runnable from the CLI (``adamas selftest``)."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .attention import full_attention, sparse_attention
from .baselines import PageSummaries, page_scores, rowwise_dot
from .cost_model import FLOPS, MEMORY, METHODS, CostParams, closed_form
from .estimator import SelectionResult, distance_rows
from .hadamard import HadamardSpec, OpCounter, fwht, hadamard_matrix
from .kv_cache import KvCache
from .pipeline import AdamasConfig, encode_rows
from .quantizer import pack_rows, unpack_rows


def check_fwht(rng) -> bool:
    for n in range(1, 9):
        d = 1 << n
        x = rng.standard_normal(d)
        counter = OpCounter()
        y = fwht(x, HadamardSpec(d), counter=counter)
        if not np.allclose(y, x @ hadamard_matrix(d), rtol=0, atol=1e-10):
            return False
        if not np.allclose(fwht(y), x, rtol=0, atol=1e-10) or counter.ops != d * n:
            return False
    return True


def check_packing(rng) -> bool:
    words = np.arange(1 << 16, dtype=np.uint16)
    for bits in (1, 2):
        if not np.array_equal(pack_rows(unpack_rows(words[:, None], bits), bits)[:, 0], words):
            return False
    return True


def check_distances(rng) -> bool:
    for bits in (1, 2):
        a = rng.integers(0, 1 << bits, (2000, 128))
        b = rng.integers(0, 1 << bits, (2000, 128))
        wa, wb = pack_rows(a, bits), pack_rows(b, bits)
        if not np.array_equal(distance_rows(wa, wb, bits, "L1"), np.abs(a - b).sum(1)):
            return False
        if not np.array_equal(distance_rows(wa, wb, bits, "L2"), ((a - b) ** 2).sum(1)):
            return False
    return True


def check_sparse_attention(rng) -> bool:
    d, s = 64, 256
    K, V = rng.standard_normal((s, d)), rng.standard_normal((s, d))
    cache = KvCache(d, 2)
    cache.extend(K, V, encode_rows(K, AdamasConfig()))
    q = rng.standard_normal(d)
    full = full_attention(q, K, V).out
    if np.max(np.abs(sparse_attention(q, cache, SelectionResult(np.arange(s))).out - full)) > 1e-12:
        return False
    sel = SelectionResult(np.sort(rng.choice(s, 32, replace=False)))
    ref = full_attention(q, K[sel.indices], V[sel.indices]).out
    return np.max(np.abs(sparse_attention(q, cache, sel).out - ref)) <= 1e-12


def check_page_bound(rng) -> bool:
    K = rng.standard_normal((512, 32))
    pages = PageSummaries.from_keys(K, 16)
    q = rng.standard_normal(32)
    bound = page_scores(q, pages)
    dots = rowwise_dot(q, K).reshape(-1, 16).max(axis=1)
    return bool(np.all(bound >= dots))


def check_cost_model(rng) -> bool:
    if FLOPS["full"](CostParams(b=1, s=1024, h=128, h_kv=128, d=128)).totals["flops"] != 655_360:
        return False
    for b, s, hd in itertools.product((1, 3), (512, 4096), (1, 32)):
        P = CostParams(b=b, s=s, h=128 * hd, h_kv=128 * hd, d=128, p=16, k=256)
        for m in METHODS:
            if FLOPS[m](P).totals["flops"] != closed_form(m, "flops", P):
                return False
            rep = MEMORY[m](P)
            if any(Fraction(rep.totals[q]) != Fraction(closed_form(m, q, P)) for q in ("read", "write")):
                return False
    return True


CHECKS = {
    "fwht matches Kronecker matrix, involution, op count": check_fwht,
    "pack/unpack round trip over all 16-bit words": check_packing,
    "packed L1/L2 equal unpacked brute force": check_distances,
    "sparse attention equals gather-then-dense": check_sparse_attention,
    "page bound dominates per-page max dot": check_page_bound,
    "cost rows sum to closed forms": check_cost_model,
}


def run(seed: int = 0, echo=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, fn in CHECKS.items():
        passed = bool(fn(rng))
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
