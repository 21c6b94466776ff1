"""Seeded synthetic Q/K/V workloads.

Random numbers come from numpy's PCG64 bit generator seeded with the
workload seed, drawn in a fixed order: Q, K, V, then the outlier draws
(Q mask then K mask, or the channel choice) or the needle noise. Same
seed, same tensors, bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GaussianWithOutliers, PlantedNeedle, WorkloadSpec


@dataclass(frozen=True, eq=False)
class Workload:
    spec: WorkloadSpec
    Q: np.ndarray  # (num_queries, d)
    K: np.ndarray  # (seq_len, d), shared by all queries
    V: np.ndarray  # (seq_len, d)
    needle_keys: np.ndarray | None = None  # (num_queries, d): replaces K[position] for query i
    needle_position: int | None = None
    outlier_channels: np.ndarray | None = None

    def keys_for(self, i: int) -> np.ndarray:
        """Key matrix seen by query ``i`` (with its planted needle, if any)."""
        if self.needle_keys is None:
            return self.K
        keys = self.K.copy()
        keys[self.needle_position] = self.needle_keys[i]
        return keys


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def outlier_channel_count(d: int, frac: float) -> int:
    if frac <= 0:
        return 0
    return min(d, max(1, round(frac * d)))


def generate_workload(spec: WorkloadSpec) -> Workload:
    rng = make_rng(spec.seed)
    d, s, nq = spec.head_dim, spec.seq_len, spec.num_queries
    Q = rng.standard_normal((nq, d))
    K = rng.standard_normal((s, d))
    V = rng.standard_normal((s, d))
    dist = spec.distribution

    if isinstance(dist, GaussianWithOutliers):
        if dist.outlier_mode == "channel":
            # the same head dimensions are inflated in every query and key
            channels = np.sort(rng.choice(d, outlier_channel_count(d, dist.outlier_frac), replace=False))
            Q[:, channels] *= dist.outlier_scale
            K[:, channels] *= dist.outlier_scale
            return Workload(spec, Q, K, V, outlier_channels=channels)
        Q[rng.random(Q.shape) < dist.outlier_frac] *= dist.outlier_scale
        K[rng.random(K.shape) < dist.outlier_frac] *= dist.outlier_scale
        return Workload(spec, Q, K, V)

    if isinstance(dist, PlantedNeedle):
        noise = rng.standard_normal((nq, d))
        # a typical unit-Gaussian key has norm ~ sqrt(d)
        direction = Q / np.linalg.norm(Q, axis=1, keepdims=True)
        needles = dist.snr * math.sqrt(d) * direction + noise
        return Workload(spec, Q, K, V, needle_keys=needles, needle_position=dist.position)

    return Workload(spec, Q, K, V)
