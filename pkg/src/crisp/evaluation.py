"""Brute-force retrieval, NDCG@k, and TREC-style qrels/run handling.

A run maps each query id to a list of (doc_id, score) pairs, descending
by score with ties broken by ascending doc id. Qrels are nested maps
query id -> doc id -> integer grade. NDCG uses exponential gain
(2^rel - 1) and a log2(rank + 1) discount; queries without any positive
judgment are skipped and counted rather than scored.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .chamfer import chamfer_fast
from .core import PruneSpec, TokenMatrix
from .errors import EmptyCorpus, NoJudgedQueries, ParseError
from .pruning import prune, prune_corpus

Run = dict[str, list[tuple[str, float]]]
Qrels = dict[str, dict[str, int]]


def _rank_hits(hits: list[tuple[str, float]], top_k: int) -> list[tuple[str, float]]:
    hits.sort(key=lambda h: (-h[1], h[0]))
    return hits[:top_k]


def search(
    query: TokenMatrix,
    corpus: Sequence[TokenMatrix],
    query_spec: PruneSpec,
    doc_spec: PruneSpec,
    top_k: int,
    threads: int = 1,
) -> list[tuple[str, float]]:
    """Score one query against every document, both sides pruned."""
    if len(corpus) == 0:
        raise EmptyCorpus("cannot search an empty corpus")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    pruned_docs = prune_corpus(corpus, doc_spec, threads=threads)
    return _search_pruned(query, pruned_docs, query_spec, top_k, threads)


def _search_pruned(query, pruned_docs, query_spec, top_k, threads=1):
    pq = prune(query, query_spec).matrix

    def score(rep):
        return (rep.matrix.id, chamfer_fast(pq, rep.matrix))

    if threads == 1 or len(pruned_docs) <= 1:
        hits = [score(rep) for rep in pruned_docs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = list(pool.map(score, pruned_docs))
    return _rank_hits(hits, top_k)


def ndcg_at_k(run: Run, qrels: Qrels, k: int = 10) -> float:
    """Macro-averaged NDCG@k over queries with at least one positive grade."""
    per_query, _ = ndcg_per_query(run, qrels, k)
    if not per_query:
        raise NoJudgedQueries("no query in the run has positive relevance judgments")
    return sum(per_query.values()) / len(per_query)


def ndcg_per_query(run: Run, qrels: Qrels, k: int = 10) -> tuple[dict[str, float], int]:
    """Per-query NDCG@k plus the count of skipped (unjudgeable) queries."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[str, float] = {}
    skipped = 0
    for qid, ranked in run.items():
        judged = qrels.get(qid, {})
        ideal = sorted((g for g in judged.values() if g > 0), reverse=True)[:k]
        idcg = sum((2**g - 1) / math.log2(i + 2) for i, g in enumerate(ideal))
        if idcg == 0.0:
            skipped += 1
            continue
        dcg = 0.0
        for i, (doc_id, _) in enumerate(ranked[:k]):
            rel = judged.get(doc_id, 0)
            if rel > 0:
                dcg += (2**rel - 1) / math.log2(i + 2)
        scores[qid] = dcg / idcg
    return scores, skipped


@dataclass(frozen=True)
class EvalReport:
    ndcg: float
    per_query: dict[str, float]
    skipped_queries: int
    rel_doc_size: float
    rel_query_size: float


def evaluate(
    corpus: Sequence[TokenMatrix],
    queries: Sequence[TokenMatrix],
    qrels: Qrels,
    query_spec: PruneSpec,
    doc_spec: PruneSpec,
    k: int = 10,
    threads: int = 1,
) -> EvalReport:
    """Retrieve for every query and report NDCG@k plus realized sizes.

    Realized relative size is total pruned tokens over total original
    tokens, computed separately for documents and queries; unlike the
    fixed-ratio table arithmetic it is capped per item by the item's own
    length.
    """
    if len(corpus) == 0:
        raise EmptyCorpus("cannot evaluate against an empty corpus")
    pruned_docs = prune_corpus(corpus, doc_spec, threads=threads)
    pruned_queries = prune_corpus(queries, query_spec, threads=threads)
    run: Run = {}
    for query, pq in zip(queries, pruned_queries):
        hits = [(rep.matrix.id, chamfer_fast(pq.matrix, rep.matrix)) for rep in pruned_docs]
        run[query.id] = _rank_hits(hits, k)
    per_query, skipped = ndcg_per_query(run, qrels, k)
    if not per_query:
        raise NoJudgedQueries("no query has positive relevance judgments")
    return EvalReport(
        ndcg=sum(per_query.values()) / len(per_query),
        per_query=per_query,
        skipped_queries=skipped,
        rel_doc_size=sum(r.m for r in pruned_docs) / sum(r.source_n for r in pruned_docs),
        rel_query_size=sum(r.m for r in pruned_queries) / sum(r.source_n for r in pruned_queries),
    )


# -- TREC-style file formats ---------------------------------------------


def load_qrels(fh: TextIO) -> Qrels:
    """Parse `<query_id> 0 <doc_id> <grade>` lines."""
    qrels: Qrels = {}
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"qrels line {lineno}: expected 4 fields, got {len(parts)}")
        qid, _, doc_id, grade = parts
        try:
            g = int(grade)
        except ValueError:
            raise ParseError(f"qrels line {lineno}: grade {grade!r} is not an integer") from None
        if g < 0:
            raise ParseError(f"qrels line {lineno}: negative grade {g}")
        qrels.setdefault(qid, {})[doc_id] = g
    return qrels


def load_run(fh: TextIO) -> Run:
    """Parse `<query_id> Q0 <doc_id> <rank> <score> <tag>` lines."""
    run: Run = {}
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(f"run line {lineno}: expected 6 fields, got {len(parts)}")
        qid, _, doc_id, _, score, _ = parts
        try:
            s = float(score)
        except ValueError:
            raise ParseError(f"run line {lineno}: score {score!r} is not a number") from None
        if not np.isfinite(s):
            raise ParseError(f"run line {lineno}: non-finite score")
        run.setdefault(qid, []).append((doc_id, s))
    for qid, hits in run.items():
        seen = set()
        for doc_id, _ in hits:
            if doc_id in seen:
                raise ParseError(f"duplicate doc id {doc_id!r} for query {qid!r}")
            seen.add(doc_id)
        run[qid] = _rank_hits(hits, len(hits))
    return run


def write_run(run: Run, fh: TextIO, tag: str = "crisp") -> None:
    """Emit TREC run lines with scores printed to 6 decimal places."""
    for qid in run:
        for rank, (doc_id, score) in enumerate(run[qid], start=1):
            fh.write(f"{qid} Q0 {doc_id} {rank} {score:.6f} {tag}\n")
