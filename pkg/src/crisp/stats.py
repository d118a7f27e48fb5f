"""Relative-representation-size arithmetic from token-count summaries.

The fixed-k ratio k / avg_tokens is deliberately not capped at 1: a
task whose average text is shorter than k reports a ratio above 1,
matching the published-table convention. Realized per-corpus sizes
(which are capped item by item) come from ``evaluation.evaluate``
instead; the two can disagree and both are intentional.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Sequence, TextIO

from .errors import ParseError

#: bundled token-count summary, one line per task
BUNDLED_STATS = "beir_token_counts.txt"


def table_rel_size(avg_tokens: float, k: int) -> float:
    """Fixed-k relative size: k divided by the task's average token count."""
    if avg_tokens <= 0:
        raise ValueError("avg_tokens must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    return k / avg_tokens


def table_averages(rows: Sequence[tuple[str, float]], k: int) -> float:
    """Unweighted mean of per-task relative sizes."""
    if not rows:
        raise ValueError("rows must be nonempty")
    return sum(table_rel_size(avg, k) for _, avg in rows) / len(rows)


def compression_rate(rel_size: float) -> float:
    if rel_size <= 0:
        raise ValueError("rel_size must be positive")
    return 1.0 / rel_size


@dataclass(frozen=True)
class TokenStats:
    task: str
    avg_candidate_tokens: float
    avg_query_tokens: float


def load_token_stats(fh: TextIO) -> list[TokenStats]:
    """Parse `<task> <avg_candidate_tokens> <avg_query_tokens>` lines."""
    rows: list[TokenStats] = []
    for lineno, line in enumerate(fh, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise ParseError(f"stats line {lineno}: expected 3 fields, got {len(parts)}")
        task, cand, query = parts
        try:
            c, q = float(cand), float(query)
        except ValueError:
            raise ParseError(f"stats line {lineno}: token counts must be numbers") from None
        if c <= 0 or q <= 0:
            raise ParseError(f"stats line {lineno}: token counts must be positive")
        rows.append(TokenStats(task, c, q))
    if not rows:
        raise ParseError("stats file has no data lines")
    return rows


def bundled_token_stats() -> list[TokenStats]:
    """The transcribed 14-task token-count summary shipped with the package."""
    ref = resources.files("crisp").joinpath("data", BUNDLED_STATS)
    with ref.open("r", encoding="utf-8") as fh:
        return load_token_stats(fh)


def size_table(rows: Sequence[TokenStats], k_doc: int, k_query: int) -> str:
    """Aligned-column text table of per-task and average relative sizes."""
    width = max(len(r.task) for r in rows) + 2
    lines = [f"{'task':<{width}}{'doc_rel':>10}{'query_rel':>12}"]
    for r in rows:
        dr = table_rel_size(r.avg_candidate_tokens, k_doc)
        qr = table_rel_size(r.avg_query_tokens, k_query)
        lines.append(f"{r.task:<{width}}{dr:>10.3f}{qr:>12.3f}")
    doc_avg = table_averages([(r.task, r.avg_candidate_tokens) for r in rows], k_doc)
    query_avg = table_averages([(r.task, r.avg_query_tokens) for r in rows], k_query)
    lines.append(f"{'average':<{width}}{doc_avg:>10.3f}{query_avg:>12.3f}")
    lines.append(
        f"{'compression':<{width}}{compression_rate(doc_avg):>10.2f}{compression_rate(query_avg):>12.2f}"
    )
    return "\n".join(lines)


def size_table_csv(rows: Sequence[TokenStats], k_doc: int, k_query: int) -> str:
    """Machine-readable export of the same table."""
    lines = ["task,doc_rel_size,query_rel_size"]
    for r in rows:
        dr = table_rel_size(r.avg_candidate_tokens, k_doc)
        qr = table_rel_size(r.avg_query_tokens, k_query)
        lines.append(f"{r.task},{dr:.6f},{qr:.6f}")
    doc_avg = table_averages([(r.task, r.avg_candidate_tokens) for r in rows], k_doc)
    query_avg = table_averages([(r.task, r.avg_query_tokens) for r in rows], k_query)
    lines.append(f"average,{doc_avg:.6f},{query_avg:.6f}")
    return "\n".join(lines) + "\n"
