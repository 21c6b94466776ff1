"""Analytic FLOP and memory-access model for full attention, Quest-style and Adamas decoding.

Every term is evaluated exactly with :class:`fractions.Fraction`; only
``log2`` of a non power of two falls back to float. Memory counts are element
accesses (no byte width); :func:`to_bytes` applies one.

A handful of memory-table rows disagree with the summary formulas printed
next to them. The rows below carry the corrected expression and a ``note``
with the printed one; :func:`printed_memory_summary` keeps the summaries
exactly as printed so the discrepancy stays checkable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Real

from .errors import CostModelError

METHODS = ("full", "quest", "adamas")

Number = int | Fraction | float


@dataclass(frozen=True)
class CostParams:
    b: int = 1
    s: int = 32768
    h: int = 4096
    h_kv: int = 4096
    d: int = 128
    n: int = 4
    p: int = 16
    k: int = 256

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise CostModelError(f"{name} must be an integer, got {value!r}")
            # s == 0 is a legal boundary: attention rows vanish
            if value < (0 if name == "s" else 1):
                raise CostModelError(f"{name} must be positive, got {value}")
        if self.h % self.d:
            raise CostModelError(f"h={self.h} is not divisible by d={self.d}")


@dataclass
class CostRow:
    name: str
    values: dict[str, Number]
    note: str | None = None


@dataclass
class CostReport:
    method: str
    kind: str  # "flops" or "memory"
    params: CostParams
    rows: list[CostRow] = field(default_factory=list)

    @property
    def quantities(self) -> tuple[str, ...]:
        return ("flops",) if self.kind == "flops" else ("read", "write")

    @property
    def totals(self) -> dict[str, Number]:
        return {q: _sum(r.values[q] for r in self.rows) for q in self.quantities}

    def row(self, name: str) -> CostRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind,
            "params": asdict(self.params),
            "components": [
                {"name": r.name, **{q: _jsonable(r.values[q]) for q in self.quantities}, **({"note": r.note} if r.note else {})}
                for r in self.rows
            ],
            "totals": {q: _jsonable(v) for q, v in self.totals.items()},
            "closed_form": {q: _jsonable(closed_form(self.method, q, self.params)) for q in self.quantities},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _sum(values) -> Number:
    total: Number = 0
    for v in values:
        total = total + v
    return _normalize(total)


def _normalize(x: Number) -> Number:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def _jsonable(x: Number):
    x = _normalize(x)
    if isinstance(x, Fraction):
        return float(x)
    return x


def _log2(x: Fraction | int) -> Number:
    x = Fraction(x)
    if x.denominator == 1 and x.numerator > 0 and x.numerator & (x.numerator - 1) == 0:
        return x.numerator.bit_length() - 1
    return math.log2(x)


def _div(num: Number, den: int) -> Number:
    if isinstance(num, float):
        return num / den
    return Fraction(num) / den


def to_bytes(report: CostReport, element_bytes: Real = 2) -> dict[str, Number]:
    """Memory totals in bytes, given the width of one accessed element."""
    if report.kind != "memory":
        raise CostModelError("only memory reports convert to bytes")
    return {q: _normalize(v * Fraction(element_bytes)) for q, v in report.totals.items()}


# --------------------------------------------------------------------------
# computational workload


def _projection_flops(P: CostParams) -> list[CostRow]:
    b, h, hkv = P.b, P.h, P.h_kv
    return [CostRow("QKV projection", {"flops": 2 * b * h * (h + 2 * hkv)})]


def _output_flops(P: CostParams) -> CostRow:
    return CostRow("Output projection", {"flops": 2 * P.b * P.h**2})


def _check_quest(P: CostParams):
    if P.k % P.p:
        raise CostModelError(f"k={P.k} is not a multiple of page size p={P.p}")
    if P.k // P.p < 2:
        raise CostModelError(f"k/p = {Fraction(P.k, P.p)} < 2 leaves no page top-k to count")


def _check_adamas(P: CostParams):
    if P.k < 2:
        raise CostModelError("k must be >= 2 for the top-k term")


def flops_full(P: CostParams) -> CostReport:
    b, s, h = P.b, P.s, P.h
    rows = _projection_flops(P) + [
        CostRow("softmax(QK^T)", {"flops": 2 * b * s * h}),
        CostRow("PV", {"flops": 2 * b * s * h}),
        _output_flops(P),
    ]
    return CostReport("full", "flops", P, rows)


def flops_quest(P: CostParams) -> CostReport:
    _check_quest(P)
    b, s, h, d, p, k = P.b, P.s, P.h, P.d, P.p, P.k
    bsh = b * s * h
    rows = _projection_flops(P) + [
        CostRow("Reduce keys", {"flops": 2 * p * h}),
        CostRow("QK element-wise product", {"flops": Fraction(2, p) * bsh}),
        CostRow("Per channel max", {"flops": Fraction(1, p) * bsh}),
        CostRow("Page sum", {"flops": Fraction(1, p) * bsh}),
        CostRow("Top-k", {"flops": _normalize(4 * _log2(Fraction(k, p)) * Fraction(bsh, p * d))}),
        CostRow("softmax(QK^T)", {"flops": 2 * b * k * h}),
        CostRow("PV", {"flops": 2 * b * k * h}),
        _output_flops(P),
    ]
    return CostReport("quest", "flops", P, rows)


def flops_adamas(P: CostParams) -> CostReport:
    _check_adamas(P)
    b, s, h, d, n, k = P.b, P.s, P.h, P.d, P.n, P.k
    bsh = b * s * h
    rows = _projection_flops(P) + [
        CostRow("Hadamard transform", {"flops": 2 * b * h}),
        CostRow("Bucketization", {"flops": 2 * n * b * h}),
        CostRow("Manhattan-distance estimation", {"flops": 3 * bsh}),
        CostRow("Top-k", {"flops": _normalize(4 * _log2(k) * Fraction(bsh, d))}),
        CostRow("softmax(QK^T)", {"flops": 2 * b * k * h}),
        CostRow("PV", {"flops": 2 * b * k * h}),
        _output_flops(P),
    ]
    return CostReport("adamas", "flops", P, rows)


# --------------------------------------------------------------------------
# memory access


def _projection_memory(P: CostParams) -> CostRow:
    b, h, hkv = P.b, P.h, P.h_kv
    return CostRow(
        "QKV projection",
        {"read": b * h + h * (h + 2 * hkv) + (h + 2 * hkv), "write": b * (h + 2 * hkv)},
    )


def _dense_attention_memory(P: CostParams, tokens: int, note: str | None = None) -> CostRow:
    b, h, hkv = P.b, P.h, P.h_kv
    return CostRow("softmax(QK^T)V", {"read": b * h + 2 * b * tokens * hkv, "write": b * h}, note)


def _output_memory(P: CostParams, note: str | None = None) -> CostRow:
    b, h = P.b, P.h
    return CostRow("Output projection", {"read": b * h + h * h, "write": b * h}, note)


_SPARSE_READ_NOTE = "printed as bh + 2bsh_kv; only the k selected tokens are read, as the summary states"


def memory_full(P: CostParams) -> CostReport:
    rows = [_projection_memory(P), _dense_attention_memory(P, P.s), _output_memory(P)]
    return CostReport("full", "memory", P, rows)


def memory_quest(P: CostParams) -> CostReport:
    _check_quest(P)
    b, s, h, d, p, k = P.b, P.s, P.h, P.d, P.p, P.k
    bsh = b * s * h
    rows = [
        _projection_memory(P),
        CostRow("Reduce keys", {"read": 3 * b * h, "write": 2 * b * h},
                "write printed as 2ph; updating one page's min/max writes 2bh, as the summary requires"),
        CostRow("Criticality estimation", {"read": Fraction(2 * bsh, p) + b * h, "write": Fraction(bsh, p * d)}),
        CostRow("Top-k", {"read": Fraction(bsh, p * d), "write": Fraction(b * k * h, p * d)}),
        _dense_attention_memory(P, k, _SPARSE_READ_NOTE),
        _output_memory(P),
    ]
    return CostReport("quest", "memory", P, rows)


def memory_adamas(P: CostParams) -> CostReport:
    b, s, h, d, k = P.b, P.s, P.h, P.d, P.k
    bsh = b * s * h
    rows = [
        _projection_memory(P),
        CostRow("Hadamard transform", {"read": 2 * b * h + 2 * d * d, "write": 2 * b * h},
                "read printed as 2bh + 2hd^2; the summary counts the shared d x d matrix once per operand (2d^2)"),
        CostRow("Bucketization", {"read": 2 * b * h, "write": Fraction(b * h, 4)}),
        CostRow("Manhattan-distance estimation", {"read": Fraction(b * h + bsh, 8), "write": Fraction(bsh, d)}),
        CostRow("Top-k", {"read": Fraction(bsh, d), "write": Fraction(b * k * h, d)}),
        _dense_attention_memory(P, k, _SPARSE_READ_NOTE),
        _output_memory(P, "write printed as bh + h^2; the summary and the other methods write bh"),
    ]
    return CostReport("adamas", "memory", P, rows)


# --------------------------------------------------------------------------
# closed-form summaries


def _flops_closed(method: str, P: CostParams) -> Number:
    b, s, h, hkv, d, n, p, k = P.b, P.s, P.h, P.h_kv, P.d, P.n, P.p, P.k
    if method == "full":
        return 4 * (h + hkv + s) * b * h
    if method == "quest":
        _check_quest(P)
        per_token = Fraction(4, p) + _div(4 * _log2(Fraction(k, p)), p * d)
        return _normalize((4 * h + 4 * hkv + per_token * s + 4 * k) * b * h + 2 * p * h)
    _check_adamas(P)
    per_token = _div(4 * _log2(k), d) + 3
    return _normalize((4 * h + 4 * hkv + 2 * n + 2 + per_token * s + 4 * k) * b * h)


def _memory_closed(method: str, quantity: str, P: CostParams, printed: bool = False) -> Number:
    b, s, h, hkv, d, p, k = P.b, P.s, P.h, P.h_kv, P.d, P.p, P.k
    bh, bsh = b * h, b * s * h
    if method == "full":
        if quantity == "read":
            bias = h + hkv if printed else h + 2 * hkv
            return 3 * bh + 2 * b * s * hkv + 2 * h * h + 2 * h * hkv + bias
        return 3 * bh + 2 * b * hkv
    if method == "quest":
        _check_quest(P)
        if quantity == "read":
            return _normalize(7 * bh + Fraction(2 * d + 1, p * d) * bsh + 2 * b * k * hkv
                              + 2 * h * h + 2 * h * hkv + h + 2 * hkv)
        return _normalize((5 + Fraction(s + k, p * d)) * bh + 2 * b * hkv)
    if quantity == "read":
        codes = 0 if printed else Fraction(bsh, 8)
        return _normalize(Fraction(57, 8) * bh + Fraction(bsh, d) + codes + 2 * b * k * hkv
                          + 2 * d * d + 2 * h * h + 2 * h * hkv + h + 2 * hkv)
    return _normalize((Fraction(21, 4) + Fraction(s + k, d)) * bh + 2 * b * hkv)


def closed_form(method: str, quantity: str, P: CostParams) -> Number:
    """Summary formula for ``quantity`` in {"flops", "read", "write"}.

    Memory summaries include two corrections to the printed text: full
    attention reads the K and V biases (``2h_kv``, printed ``h_kv``) and
    Adamas reads the packed key codes (``bsh/8``, omitted in print).
    """
    if method not in METHODS:
        raise CostModelError(f"unknown method {method!r}")
    if quantity == "flops":
        return _flops_closed(method, P)
    if quantity not in ("read", "write"):
        raise CostModelError(f"unknown quantity {quantity!r}")
    return _memory_closed(method, quantity, P)


def printed_memory_summary(method: str, quantity: str, P: CostParams) -> Number:
    """Memory summary exactly as printed, kept for comparison with :func:`closed_form`."""
    return _memory_closed(method, quantity, P, printed=True)


FLOPS = {"full": flops_full, "quest": flops_quest, "adamas": flops_adamas}
MEMORY = {"full": memory_full, "quest": memory_quest, "adamas": memory_adamas}


def cost_summary(method: str, P: CostParams) -> dict:
    """FLOP and memory reports for one method, as JSON-ready dicts."""
    if method not in METHODS:
        raise CostModelError(f"unknown method {method!r}")
    return {"method": method, "flops": FLOPS[method](P).to_dict(), "memory": MEMORY[method](P).to_dict()}
