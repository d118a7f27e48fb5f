"""Token-pruning strategies producing reduced representations.

Positional strategies (tail, spacing) select a subsequence of rows;
clustering strategies replace rows with per-cluster mean vectors
(centroids). Cluster output rows are emitted in order of each cluster's
lowest-index member token so serialization is order-stable; Chamfer
scoring is unaffected by row order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .core import PrunedRep, PruneSpec, Strategy, TokenMatrix, l2_normalize, validate
from .errors import InvalidFraction
from .clustering import kmeans


def tail_prune(matrix: TokenMatrix, k: int) -> PrunedRep:
    """Keep the last min(k, n) rows in original order.

    Inputs with n <= k pass through whole.
    """
    validate(matrix)
    if k < 1:
        raise ValueError("k must be >= 1")
    n = matrix.n
    kept = matrix.rows[max(0, n - k) :]
    return PrunedRep(matrix.with_rows(kept), source_n=n)


def kspace_prune(matrix: TokenMatrix, k: int) -> PrunedRep:
    """Keep every k-th row starting from index 0; k=1 is the identity."""
    validate(matrix)
    if k < 1:
        raise ValueError("k must be >= 1")
    return PrunedRep(matrix.with_rows(matrix.rows[::k]), source_n=matrix.n)


def _cluster(matrix: TokenMatrix, k_eff: int, seed: int) -> PrunedRep:
    result = kmeans(matrix.rows, k_eff, seed)
    # renumber clusters by lowest-index member
    order = np.full(k_eff, matrix.n, dtype=np.int64)
    for token, cluster in enumerate(result.assignments):
        if order[cluster] > token:
            order[cluster] = token
    new_index = np.empty(k_eff, dtype=np.int64)
    new_index[np.argsort(order, kind="stable")] = np.arange(k_eff)
    assignments = new_index[result.assignments]
    centroids = np.empty_like(result.centroids)
    centroids[new_index] = result.centroids
    return PrunedRep(matrix.with_rows(centroids), source_n=matrix.n, assignments=assignments)


def cluster_prune_fixed(matrix: TokenMatrix, k: int, seed: int = 0) -> PrunedRep:
    """Replace rows with min(k, n) cluster means; records assignments."""
    validate(matrix)
    if k < 1:
        raise ValueError("k must be >= 1")
    return _cluster(matrix, min(k, matrix.n), seed)


def cluster_prune_relative(matrix: TokenMatrix, fraction: float, seed: int = 0) -> PrunedRep:
    """Cluster into max(1, floor(fraction * n)) means.

    The floor is clamped to 1 because a representation must keep at least
    one vector for scoring to be defined.
    """
    validate(matrix)
    if not (0.0 < fraction <= 1.0):
        raise InvalidFraction(f"fraction must be in (0, 1], got {fraction}")
    k = max(1, int(np.floor(fraction * matrix.n)))
    return _cluster(matrix, k, seed)


def prune(matrix: TokenMatrix, spec: PruneSpec) -> PrunedRep:
    """Apply one strategy per the spec; normalization (if any) comes first."""
    validate(matrix)
    if spec.normalize:
        matrix = l2_normalize(matrix)
    if spec.strategy is Strategy.FULL:
        return PrunedRep(matrix, source_n=matrix.n)
    if spec.strategy is Strategy.TAIL:
        return tail_prune(matrix, spec.k)
    if spec.strategy is Strategy.KSPACE:
        return kspace_prune(matrix, spec.k)
    if spec.strategy is Strategy.CLUSTER_FIXED:
        return cluster_prune_fixed(matrix, spec.k, spec.seed)
    if spec.strategy is Strategy.CLUSTER_RELATIVE:
        return cluster_prune_relative(matrix, spec.fraction, spec.seed)
    raise ValueError(f"unknown strategy {spec.strategy}")


def prune_corpus(
    matrices: Sequence[TokenMatrix], spec: PruneSpec, threads: int = 1
) -> list[PrunedRep]:
    """Prune many matrices, output order matching input order.

    Per-matrix work is sequential, so the thread count never changes
    results.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1 or len(matrices) <= 1:
        return [prune(m, spec) for m in matrices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda m: prune(m, spec), matrices))
