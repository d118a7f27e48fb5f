"""Seeded synthetic data with known (planted) structure.

Two generators back the training demo and the test suite: a planted
topic-retrieval task whose token embeddings are trainable parameters,
and a noisy corpus where per-document noise tokens corrupt full-set
scoring but average away under clustered pruning. Both are fully
deterministic given their seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chamfer import chamfer_fast
from .core import PruneSpec, TokenMatrix
from .loss import TrainingBatch
from .pruning import prune

Qrels = dict[str, dict[str, int]]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _orthonormal_topics(rng: np.random.Generator, n_topics: int, d: int) -> np.ndarray:
    basis, _ = np.linalg.qr(rng.normal(size=(d, n_topics)))
    return basis.T  # (n_topics, d), unit rows


@dataclass
class PlantedTask:
    """Topic-structured retrieval task over trainable token embeddings.

    ``params`` holds every item's (n, d) embedding array by id and is the
    store SGD updates in place. Queries pair with one same-topic positive
    each; two other-topic hard negatives per query cover the rest of the
    corpus, so every document receives training signal.
    """

    params: dict[str, np.ndarray]
    query_ids: list[str]
    doc_ids: list[str]
    topic_of: dict[str, int]
    positive_of: dict[str, str]
    hard_negatives_of: dict[str, list[str]]
    query_spec: PruneSpec
    doc_spec: PruneSpec
    temperature: float

    def _matrix(self, item_id: str, params: dict[str, np.ndarray]) -> TokenMatrix:
        return TokenMatrix(item_id, params[item_id])

    def make_batch(
        self, step: int, rng: np.random.Generator, params: dict[str, np.ndarray]
    ) -> TrainingBatch:
        """Full-batch view of the current parameters (deterministic)."""
        return TrainingBatch(
            queries=tuple(self._matrix(q, params) for q in self.query_ids),
            positives=tuple(self._matrix(self.positive_of[q], params) for q in self.query_ids),
            hard_negatives=tuple(
                tuple(self._matrix(h, params) for h in self.hard_negatives_of[q])
                for q in self.query_ids
            ),
            temperature=self.temperature,
            query_spec=self.query_spec,
            doc_spec=self.doc_spec,
        )

    def accuracy(self, params: dict[str, np.ndarray]) -> float:
        """Fraction of queries whose top-1 document shares their topic."""
        pruned_docs = [prune(self._matrix(did, params), self.doc_spec) for did in self.doc_ids]
        correct = 0
        for qid in self.query_ids:
            pq = prune(self._matrix(qid, params), self.query_spec).matrix
            hits = [(rep.matrix.id, chamfer_fast(pq, rep.matrix)) for rep in pruned_docs]
            hits.sort(key=lambda h: (-h[1], h[0]))
            if self.topic_of[hits[0][0]] == self.topic_of[qid]:
                correct += 1
        return correct / len(self.query_ids)


def planted_task(
    seed: int = 11,
    n_topics: int = 3,
    queries_per_topic: int = 10,
    docs_per_topic: int = 30,
    d: int = 16,
    query_tokens: int = 6,
    doc_tokens: int = 8,
    signal: float = 0.35,
    noise: float = 0.55,
    temperature: float = 0.5,
    query_spec: PruneSpec | None = None,
    doc_spec: PruneSpec | None = None,
) -> PlantedTask:
    """Build the built-in planted topic task.

    Initial embeddings carry a weak topic direction buried in noise, so
    retrieval starts imperfect and improves as the contrastive loss pulls
    same-topic items together.
    """
    rng = _rng(seed)
    topics = _orthonormal_topics(rng, n_topics, d)
    params: dict[str, np.ndarray] = {}
    query_ids: list[str] = []
    doc_ids: list[str] = []
    topic_of: dict[str, int] = {}

    def tokens(topic: int, count: int) -> np.ndarray:
        return signal * topics[topic] + noise * rng.normal(size=(count, d))

    for t in range(n_topics):
        for j in range(docs_per_topic):
            did = f"d{t}_{j}"
            params[did] = tokens(t, doc_tokens)
            doc_ids.append(did)
            topic_of[did] = t
    for t in range(n_topics):
        for j in range(queries_per_topic):
            qid = f"q{t}_{j}"
            params[qid] = tokens(t, query_tokens)
            query_ids.append(qid)
            topic_of[qid] = t

    positive_of = {f"q{t}_{j}": f"d{t}_{j}" for t in range(n_topics) for j in range(queries_per_topic)}

    # leftover docs (those not used as positives) serve as hard negatives;
    # each topic's leftovers are drawn exactly once by the other topics' queries
    pools = {
        t: [f"d{t}_{j}" for j in range(queries_per_topic, docs_per_topic)] for t in range(n_topics)
    }
    cursors = {t: 0 for t in range(n_topics)}
    hard_negatives_of: dict[str, list[str]] = {}
    for t in range(n_topics):
        for j in range(queries_per_topic):
            negs = []
            for offset in (1, 2):
                u = (t + offset) % n_topics
                negs.append(pools[u][cursors[u]])
                cursors[u] += 1
            hard_negatives_of[f"q{t}_{j}"] = negs

    return PlantedTask(
        params=params,
        query_ids=query_ids,
        doc_ids=doc_ids,
        topic_of=topic_of,
        positive_of=positive_of,
        hard_negatives_of=hard_negatives_of,
        query_spec=query_spec or PruneSpec.cluster_fixed(2, seed=seed),
        doc_spec=doc_spec or PruneSpec.cluster_fixed(4, seed=seed),
        temperature=temperature,
    )


def noisy_topic_corpus(
    seed: int = 5,
    n_topics: int = 4,
    docs_per_topic: int = 10,
    queries_per_topic: int = 5,
    d: int = 8,
    signal_tokens: int = 8,
    noise_tokens: int = 24,
    signal_jitter: float = 0.05,
    noise_scale: float = 1.4,
) -> tuple[list[TokenMatrix], list[TokenMatrix], Qrels]:
    """Corpus whose noise tokens corrupt full-set scoring.

    Each document carries a tight, heavy group of signal tokens on its
    topic direction plus many unit-norm noise directions. In this low
    dimension the noise directions cover the sphere, so their chance
    alignments with a query out-score the signal for wrong documents;
    clustering with k = topic count keeps the signal group intact while
    partitioning the noise sphere into caps whose mean vectors are much
    shorter than any single noise token. That norm shrinkage is the
    denoising effect under test. Returns (queries, corpus, qrels);
    every same-topic document is relevant at grade 1.
    """
    rng = _rng(seed)
    topics = _orthonormal_topics(rng, n_topics, d)
    corpus: list[TokenMatrix] = []
    qrels: Qrels = {}
    for t in range(n_topics):
        for j in range(docs_per_topic):
            sig = topics[t] + signal_jitter * rng.normal(size=(signal_tokens, d))
            # constant-norm random directions: no norm outliers to grab
            # singleton clusters, so noise averages down under pooling
            raw = rng.normal(size=(noise_tokens, d))
            noise = noise_scale * raw / np.linalg.norm(raw, axis=1, keepdims=True)
            corpus.append(TokenMatrix(f"d{t}_{j}", np.vstack([sig, noise])))
    queries: list[TokenMatrix] = []
    for t in range(n_topics):
        for j in range(queries_per_topic):
            qid = f"q{t}_{j}"
            queries.append(
                TokenMatrix(qid, topics[t][None, :] + signal_jitter * rng.normal(size=(1, d)))
            )
            qrels[qid] = {f"d{t}_{i}": 1 for i in range(docs_per_topic)}
    return queries, corpus, qrels


def demo_batch(
    seed: int = 3,
    batch_size: int = 3,
    d: int = 8,
    temperature: float = 1.0,
    query_spec: PruneSpec | None = None,
    doc_spec: PruneSpec | None = None,
) -> TrainingBatch:
    """Random training batch for gradient checking.

    Standard-normal embeddings keep Chamfer witnesses well away from
    ties, which central differences need. One hard negative per query.
    """
    rng = _rng(seed)
    queries = tuple(
        TokenMatrix(f"q{i}", rng.normal(size=(int(rng.integers(6, 10)), d)))
        for i in range(batch_size)
    )
    positives = tuple(
        TokenMatrix(f"p{i}", rng.normal(size=(int(rng.integers(10, 16)), d)))
        for i in range(batch_size)
    )
    hard = tuple(
        (TokenMatrix(f"h{i}", rng.normal(size=(int(rng.integers(10, 16)), d))),)
        for i in range(batch_size)
    )
    return TrainingBatch(
        queries=queries,
        positives=positives,
        hard_negatives=hard,
        temperature=temperature,
        query_spec=query_spec or PruneSpec.full(),
        doc_spec=doc_spec or PruneSpec.full(),
    )


def random_corpus(
    seed: int, count: int, d: int = 32, min_tokens: int = 8, max_tokens: int = 24
) -> list[TokenMatrix]:
    """Unstructured corpus for determinism and round-trip tests."""
    rng = _rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(min_tokens, max_tokens + 1))
        out.append(TokenMatrix(f"doc{i:04d}", rng.normal(size=(n, d))))
    return out
