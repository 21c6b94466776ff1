"""Fast Walsh-Hadamard transform for power-of-two head dimensions.

The butterfly works on the last axis, so a single head vector and a
``(rows, d)`` block of keys go through the same code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotPowerOfTwoError

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class HadamardSpec:
    dim: int
    normalized: bool = True

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2 or not is_power_of_two(int(self.dim)):
            raise NotPowerOfTwoError(f"Hadamard dimension must be a power of two >= 2, got {self.dim!r}")

    @property
    def levels(self) -> int:
        return int(self.dim).bit_length() - 1


class OpCounter:
    """Tallies butterfly additions and subtractions."""

    def __init__(self):
        self.adds = 0
        self.subs = 0

    @property
    def ops(self) -> int:
        return self.adds + self.subs

    def reset(self):
        self.adds = 0
        self.subs = 0


def _as_real(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        raise DimensionMismatchError("expected a vector, got a scalar")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains NaN or Inf")
    return arr


def fwht(x, spec: HadamardSpec | None = None, *, counter: OpCounter | None = None) -> np.ndarray:
    """Return ``x @ H`` along the last axis in O(d log d).

    ``H`` is the Sylvester Hadamard matrix; with ``spec.normalized`` each of
    the ``log2(d)`` butterfly levels is scaled by 1/sqrt(2), which makes the
    transform orthogonal and its own inverse. The input is never modified.
    """
    arr = _as_real(x)
    d = arr.shape[-1]
    if spec is None:
        spec = HadamardSpec(d)
    if d != spec.dim:
        raise DimensionMismatchError(f"vector length {d} does not match Hadamard dim {spec.dim}")

    lead = arr.shape[:-1]
    rows = int(np.prod(lead)) if lead else 1
    out = arr.reshape(rows, d).copy()
    h = 1
    while h < d:
        blocks = out.reshape(rows, d // (2 * h), 2, h)
        a = blocks[:, :, 0, :]
        b = blocks[:, :, 1, :]
        s = a + b
        t = a - b
        if spec.normalized:
            s *= _INV_SQRT2
            t *= _INV_SQRT2
        out = np.stack((s, t), axis=2).reshape(rows, d)
        if counter is not None:
            counter.adds += rows * (d // 2)
            counter.subs += rows * (d // 2)
        h *= 2
    return out.reshape(arr.shape)


def hadamard_matrix(spec: HadamardSpec | int) -> np.ndarray:
    """Explicit Sylvester matrix built by repeated Kronecker products with H2."""
    if not isinstance(spec, HadamardSpec):
        spec = HadamardSpec(int(spec))
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    if spec.normalized:
        h2 = h2 * _INV_SQRT2
    mat = h2
    for _ in range(spec.levels - 1):
        mat = np.kron(h2, mat)
    return mat
