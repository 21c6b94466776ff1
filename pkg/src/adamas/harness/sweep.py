"""Selection-policy sweeps over synthetic workloads.

Every policy is reduced to a per-query token ranking (or a fixed mask) so
that all budgets come from one ranking: the first ``k`` tokens of a stable
sort are exactly the ``k`` smallest with lowest-index tie-breaking, which is
what :func:`adamas.estimator.top_k` returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..attention import masked_attention
from ..baselines import PageSummaries, WindowPolicy, page_bounds, window_select
from ..errors import ConfigError
from ..estimator import distance_rows
from ..kv_cache import KvCache
from ..pipeline import AdamasConfig, encode_rows
from .config import AdamasPolicy, OraclePolicy, QuestPolicy, SweepConfig, WindowPolicySpec, WorkloadSpec
from .workload import Workload, generate_workload

QUERY_CHUNK = 64


@dataclass(frozen=True)
class ResultRow:
    """Per (policy, budget, seed) means over the workload's queries.

    ``recall`` is recall@k against the exact dot-product top-k.
    ``selected_count`` is the largest selection made for any query.
    ``needle_recall`` is set only for planted-needle workloads.
    """

    policy: str
    budget: int
    seed: int
    recall: float
    output_error: float
    selected_count: int
    needle_recall: float | None = None


def _rank_of(order: np.ndarray) -> np.ndarray:
    """Inverse permutation per row: rank[i, order[i, j]] = j."""
    rank = np.empty_like(order)
    rows = np.arange(order.shape[0])[:, None]
    rank[rows, order] = np.arange(order.shape[1])
    return rank


def _stable_rank(values: np.ndarray) -> np.ndarray:
    return _rank_of(np.argsort(values, axis=1, kind="stable"))


class _AdamasRanker:
    def __init__(self, policy: AdamasPolicy, wl: Workload):
        self.cfg = AdamasConfig(bits=policy.bits, metric=policy.metric, with_hadamard=policy.with_hadamard)
        d = wl.K.shape[1]
        self.cache = KvCache(d, self.cfg.bits, capacity=wl.K.shape[0])
        self.cache.extend(wl.K, wl.V, encode_rows(wl.K, self.cfg))
        self.needle_codes = encode_rows(wl.needle_keys, self.cfg) if wl.needle_keys is not None else None
        self.pos = wl.needle_position

    def ranks(self, Qc: np.ndarray, qi: slice) -> np.ndarray:
        q_codes = encode_rows(Qc, self.cfg)
        scores = distance_rows(q_codes[:, None, :], self.cache.code_words[None, :, :], self.cfg.bits, self.cfg.metric)
        if self.needle_codes is not None:
            scores[:, self.pos] = distance_rows(q_codes, self.needle_codes[qi], self.cfg.bits, self.cfg.metric)
        return _stable_rank(scores)


class _QuestRanker:
    def __init__(self, policy: QuestPolicy, wl: Workload):
        self.policy = policy
        self.p = policy.page_size
        self.wl = wl
        self.pages = PageSummaries.from_keys(wl.K, self.p)
        self.mins, self.maxs = self.pages.mins, self.pages.maxs
        self.token_page = np.arange(wl.K.shape[0]) // self.p

    def page_ranks(self, Qc: np.ndarray, qi: slice) -> np.ndarray:
        scores = page_bounds(Qc[:, None, :], self.mins[None], self.maxs[None])
        wl = self.wl
        if wl.needle_keys is not None:
            pg = wl.needle_position // self.p
            block = np.repeat(wl.K[None, pg * self.p : (pg + 1) * self.p], Qc.shape[0], axis=0)
            block[:, wl.needle_position - pg * self.p] = wl.needle_keys[qi]
            scores[:, pg] = page_bounds(Qc, block.min(axis=1), block.max(axis=1))
        if self.policy.include_current_page:
            scores[:, -1] = np.inf
        return _stable_rank(-scores)


def _validate(sweep: SweepConfig, spec: WorkloadSpec):
    for policy in sweep.policies:
        if isinstance(policy, QuestPolicy):
            for k in sweep.budgets:
                if k % policy.page_size:
                    raise ConfigError(f"policy {policy.label}, budget {k}: budget is not a multiple of page_size {policy.page_size}")


def run_sweep(spec: WorkloadSpec, sweep: SweepConfig, workload: Workload | None = None) -> list[ResultRow]:
    """Measure every (policy, budget) cell on one seeded workload."""
    _validate(sweep, spec)
    wl = workload if workload is not None else generate_workload(spec)
    s = spec.seq_len
    want_error = "output_error" in sweep.metrics
    budgets = sweep.budgets
    policies = sweep.policies

    rankers = {}
    for policy in policies:
        if isinstance(policy, AdamasPolicy):
            rankers[policy.label] = _AdamasRanker(policy, wl)
        elif isinstance(policy, QuestPolicy):
            rankers[policy.label] = _QuestRanker(policy, wl)

    window_masks = {}
    for policy in policies:
        if isinstance(policy, WindowPolicySpec):
            for k in budgets:
                m = np.zeros(s, dtype=bool)
                m[window_select(s, WindowPolicy.for_budget(k, policy.sink)).indices] = True
                window_masks[policy.label, k] = m

    cells = [(p.label, k) for p in policies for k in budgets]
    recall_sum = dict.fromkeys(cells, 0.0)
    error_sum = dict.fromkeys(cells, 0.0)
    max_count = dict.fromkeys(cells, 0)
    needle_hits = dict.fromkeys(cells, 0)
    pos = wl.needle_position

    for start in range(0, spec.num_queries, QUERY_CHUNK):
        qi = slice(start, min(start + QUERY_CHUNK, spec.num_queries))
        Qc = wl.Q[qi]
        dots = Qc @ wl.K.T
        if wl.needle_keys is not None:
            dots[:, pos] = np.einsum("ij,ij->i", Qc, wl.needle_keys[qi])
        oracle_rank = _stable_rank(-dots)
        full_out = masked_attention(dots, wl.V, np.ones_like(dots, dtype=bool)) if want_error else None

        for policy in policies:
            label = policy.label
            if isinstance(policy, AdamasPolicy):
                rank = rankers[label].ranks(Qc, qi)
            elif isinstance(policy, QuestPolicy):
                ranker = rankers[label]
                page_rank = ranker.page_ranks(Qc, qi)[:, ranker.token_page]
            elif isinstance(policy, OraclePolicy):
                rank = oracle_rank

            for k in budgets:
                kk = min(k, s)
                if isinstance(policy, WindowPolicySpec):
                    mask = np.broadcast_to(window_masks[label, k], dots.shape)
                elif isinstance(policy, QuestPolicy):
                    mask = page_rank < k // policy.page_size
                else:
                    mask = rank < kk
                hits = np.count_nonzero(mask & (oracle_rank < kk), axis=1)
                recall_sum[label, k] += float(np.sum(hits / kk))
                max_count[label, k] = max(max_count[label, k], int(mask.sum(axis=1).max()))
                if pos is not None:
                    needle_hits[label, k] += int(np.count_nonzero(mask[:, pos]))
                if want_error:
                    approx = masked_attention(dots, wl.V, mask)
                    err = np.linalg.norm(approx - full_out, axis=1) / np.maximum(np.linalg.norm(full_out, axis=1), 1e-30)
                    error_sum[label, k] += float(err.sum())

    nq = spec.num_queries
    rows = []
    for label, k in cells:
        rows.append(ResultRow(
            policy=label,
            budget=k,
            seed=spec.seed,
            recall=recall_sum[label, k] / nq,
            output_error=error_sum[label, k] / nq if want_error else math.nan,
            selected_count=max_count[label, k],
            needle_recall=needle_hits[label, k] / nq if pos is not None else None,
        ))
    return rows


def run_sweeps(specs: list[WorkloadSpec], sweep: SweepConfig) -> list[ResultRow]:
    """Run :func:`run_sweep` for each seed; rows ordered by seed, policy, budget."""
    rows: list[ResultRow] = []
    for spec in specs:
        rows.extend(run_sweep(spec, sweep))
    return rows
