"""CSV/JSON emission of sweep rows and the needle-retrieval summary."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from .sweep import ResultRow

CSV_FIELDS = ("policy", "budget", "seed", "recall", "output_error", "selected_count")
NEEDLE_FIELDS = ("policy", "budget", "needle_recall", "seeds")


def _fmt(value) -> str:
    # repr gives the shortest round-tripping float text, stable across runs
    return repr(value) if isinstance(value, float) else str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def row_to_dict(row: ResultRow) -> dict:
    out = {f: getattr(row, f) for f in CSV_FIELDS}
    if row.needle_recall is not None:
        out["needle_recall"] = row.needle_recall
    return out


def row_from_dict(data: dict) -> ResultRow:
    return ResultRow(**data)


def rows_to_json(rows: list[ResultRow]) -> str:
    return json.dumps([row_to_dict(r) for r in rows], indent=2) + "\n"


def emit(rows: list[ResultRow], fmt: str, path) -> Path:
    """Write rows as ``csv`` or ``json``; output bytes depend only on the rows."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


@dataclass(frozen=True)
class NeedleSummary:
    policy: str
    budget: int
    needle_recall: float
    seeds: int


def needle_report(rows: list[ResultRow]) -> list[NeedleSummary]:
    """Fraction of queries whose selection kept the needle, per policy and budget.

    Averaged over seeds; order follows first appearance in ``rows``.
    """
    groups: dict[tuple[str, int], list[float]] = {}
    for r in rows:
        if r.needle_recall is None:
            raise ConfigError(f"row {r.policy}/{r.budget}/seed {r.seed} is not from a planted_needle workload")
        groups.setdefault((r.policy, r.budget), []).append(r.needle_recall)
    return [NeedleSummary(p, k, sum(v) / len(v), len(v)) for (p, k), v in groups.items()]


def needle_to_csv(summary: list[NeedleSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NEEDLE_FIELDS)
    for s in summary:
        writer.writerow([_fmt(getattr(s, f)) for f in NEEDLE_FIELDS])
    return buf.getvalue()


def needle_table(summary: list[NeedleSummary]) -> str:
    """Plain-text grid: one line per policy, one column per budget."""
    budgets = sorted({s.budget for s in summary})
    policies = list(dict.fromkeys(s.policy for s in summary))
    cell = {(s.policy, s.budget): s.needle_recall for s in summary}
    width = max(len(p) for p in policies) if policies else 6
    lines = [" " * width + "".join(f"{k:>8}" for k in budgets)]
    for p in policies:
        vals = "".join(f"{cell[p, k]:>8.3f}" if (p, k) in cell else f"{'-':>8}" for k in budgets)
        lines.append(f"{p:<{width}}{vals}")
    return "\n".join(lines)
