"""Deterministic seeded K-means over token embeddings.

Reproducibility contract: all randomness comes from numpy's Philox
counter-based generator keyed by the caller's 64-bit seed, every tie
breaks to the lowest index, and empty clusters are repaired by stealing
the point farthest from its assigned centroid. Identical (points, k,
seed) therefore give identical results across runs and platforms with
the same floating-point semantics.

Initialization is the D²-weighted scheme: the first center is a
uniformly chosen point, each later center is a point drawn with
probability proportional to its squared distance from the nearest
already-chosen center. Centers are distinct point indices; when every
remaining point has zero distance (mass of duplicates), the draw falls
back to uniform over the unchosen indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge

#: cap on the pairwise-distance scratch block, in elements
_CHUNK_ELEMS = 1 << 22


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class KMeansResult:
    """Converged (or max_iter-terminated) clustering state.

    Invariants: every cluster index occurs in ``assignments``; each
    centroid is the mean of its members; ``sse`` is the within-cluster
    sum of squared distances under ``assignments``. ``sse_trace`` holds
    the SSE after each full iteration, a non-increasing sequence.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    iterations: int
    converged: bool
    sse_trace: tuple[float, ...]


def _pairwise_sq(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k), chunked to bound memory."""
    n, d = points.shape
    k = centers.shape[0]
    out = np.empty((n, k))
    step = max(1, _CHUNK_ELEMS // max(1, k * d))
    for s in range(0, n, step):
        diff = points[s : s + step, None, :] - centers[None, :, :]
        out[s : s + step] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def kmeanspp_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Choose k distinct point indices by D² weighting; returns their rows."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k > n:
        raise KTooLarge(f"k={k} exceeds point count n={n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = _rng(seed)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(0, n)
    closest = _pairwise_sq(points, points[chosen[0]][None, :])[:, 0]
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for i in range(1, k):
        weights = np.where(taken, 0.0, closest)
        cum = np.cumsum(weights)
        if cum[-1] > 0.0:
            r = rng.random() * cum[-1]  # r < cum[-1], so the draw has positive weight
            idx = int(np.searchsorted(cum, r, side="right"))
        else:
            # all remaining points coincide with chosen centers
            remaining = np.nonzero(~taken)[0]
            idx = int(remaining[rng.integers(0, remaining.size)])
        chosen[i] = idx
        taken[idx] = True
        dist_new = _pairwise_sq(points, points[idx][None, :])[:, 0]
        np.minimum(closest, dist_new, out=closest)
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid assignment with lowest-index ties, then repair.

    Empty clusters (ascending index) each steal the point that lies
    farthest from its currently assigned centroid, ties to the lowest
    point index; sole members of a cluster are never stolen, so repair
    cannot create new empty clusters.
    """
    d2 = _pairwise_sq(points, centroids)
    assign = d2.argmin(axis=1)
    k = centroids.shape[0]
    counts = np.bincount(assign, minlength=k)
    if counts.min() == 0:
        n = points.shape[0]
        own = d2[np.arange(n), assign]
        for j in range(k):
            if counts[j] > 0:
                continue
            eligible = counts[assign] >= 2
            candidate = np.where(eligible, own, -np.inf)
            p = int(candidate.argmax())
            counts[assign[p]] -= 1
            assign[p] = j
            counts[j] = 1
    return assign


def _means(points: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, assign, points)
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    return sums / counts[:, None]


def _sse(points: np.ndarray, centroids: np.ndarray, assign: np.ndarray) -> float:
    diff = points - centroids[assign]
    return float(np.einsum("nd,nd->", diff, diff))


def lloyd(
    points: np.ndarray, init: np.ndarray, max_iter: int = 50, tol: float = 1e-6
) -> KMeansResult:
    """Alternate assignment and mean updates from the given centers.

    One iteration is assignment (with repair) followed by the centroid
    update; the reported SSE is taken after the update, which makes the
    trace monotone even across repairs. Stops at an assignment fixed
    point, when the SSE improvement falls below ``tol``, or at
    ``max_iter``. The returned centroids are always the means of the
    returned assignments.
    """
    points = np.asarray(points, dtype=np.float64)
    init = np.asarray(init, dtype=np.float64)
    if init.ndim != 2 or init.shape[1] != points.shape[1]:
        raise ValueError("init must be a k x d matrix matching the points")
    k = init.shape[0]
    if k > points.shape[0]:
        raise KTooLarge(f"init has k={k} rows but only n={points.shape[0]} points")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    assign = _assign(points, init)
    centroids = _means(points, assign, k)
    sse = _sse(points, centroids, assign)
    trace = [sse]
    iterations = 1
    converged = False
    while True:
        new_assign = _assign(points, centroids)
        if np.array_equal(new_assign, assign):
            converged = True
            break
        if iterations >= max_iter:
            break
        new_centroids = _means(points, new_assign, k)
        new_sse = _sse(points, new_centroids, new_assign)
        improvement = sse - new_sse
        assign, centroids, sse = new_assign, new_centroids, new_sse
        trace.append(sse)
        iterations += 1
        if improvement < tol:
            converged = True
            break

    assign.setflags(write=False)
    centroids.setflags(write=False)
    return KMeansResult(
        centroids=centroids,
        assignments=assign,
        sse=sse,
        iterations=iterations,
        converged=converged,
        sse_trace=tuple(trace),
    )


def kmeans(
    points: np.ndarray, k: int, seed: int, max_iter: int = 50, tol: float = 1e-6
) -> KMeansResult:
    """D²-seeded initialization followed by Lloyd refinement."""
    points = np.asarray(points, dtype=np.float64)
    init = kmeanspp_init(points, k, seed)
    return lloyd(points, init, max_iter=max_iter, tol=tol)
