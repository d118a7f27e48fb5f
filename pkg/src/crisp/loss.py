"""Contrastive Chamfer loss over pruned representations, with gradients.

The batch's token embeddings themselves are the trainable parameters
(there is no encoder here). For each query, the candidate pool is its
own positive, every other query's positive (in-batch negatives), and
any hard negatives; the loss is the mean softmax cross-entropy of the
temperature-scaled Chamfer scores, computed with max-subtraction.

Gradients are exact for the forward pass as computed: the Chamfer row
maximum contributes through its (earliest-index) witness row only, and
cluster assignments are treated as constants of the forward pass, with
a centroid's gradient split evenly over its member tokens. Positional
selection passes gradients to kept rows and exact zeros to dropped
rows. The finite-difference checker re-freezes cluster assignments to
the unperturbed forward pass so the two sides differentiate the same
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import PrunedRep, PruneSpec, Strategy, TokenMatrix, validate
from .errors import DegenerateBatch, DimensionMismatch
from .pruning import prune

_TINY = 1e-12


@dataclass(frozen=True)
class TrainingBatch:
    """Paired queries and positives plus optional per-query hard negatives.

    ``positives[i]`` is the relevant document for ``queries[i]``. Item ids
    must be unique across the whole batch; they key the gradient map.
    """

    queries: tuple[TokenMatrix, ...]
    positives: tuple[TokenMatrix, ...]
    hard_negatives: Optional[tuple[tuple[TokenMatrix, ...], ...]] = None
    temperature: float = 0.05
    query_spec: PruneSpec = PruneSpec.full()
    doc_spec: PruneSpec = PruneSpec.full()

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "positives", tuple(self.positives))
        if self.hard_negatives is not None:
            object.__setattr__(
                self, "hard_negatives", tuple(tuple(group) for group in self.hard_negatives)
            )

    @property
    def size(self) -> int:
        return len(self.queries)

    def negatives_for(self, i: int) -> tuple[TokenMatrix, ...]:
        if self.hard_negatives is None:
            return ()
        return self.hard_negatives[i]


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_coordinate: tuple[str, int, int]
    analytic: float
    numeric: float
    step: float


def _validate_batch(batch: TrainingBatch) -> None:
    b = batch.size
    if b == 0:
        raise ValueError("batch has no queries")
    if len(batch.positives) != b:
        raise ValueError("queries and positives must pair up one to one")
    if batch.hard_negatives is not None and len(batch.hard_negatives) != b:
        raise ValueError("hard_negatives must provide one (possibly empty) list per query")
    if not batch.temperature > 0.0:
        raise ValueError("temperature must be positive")
    has_hard = any(len(batch.negatives_for(i)) > 0 for i in range(b))
    if b == 1 and not has_hard:
        raise DegenerateBatch("batch of one query with no hard negatives has no negative signal")
    for spec in (batch.query_spec, batch.doc_spec):
        if spec.normalize:
            raise ValueError("normalized specs are not supported in loss/gradient paths")
    d = None
    seen: set[str] = set()
    for matrix, _ in _batch_items(batch):
        validate(matrix)
        if d is None:
            d = matrix.d
        elif matrix.d != d:
            raise DimensionMismatch(f"item {matrix.id!r} has d={matrix.d}, expected {d}")
        if matrix.id in seen:
            raise ValueError(f"duplicate item id {matrix.id!r} in batch")
        seen.add(matrix.id)


def _batch_items(batch: TrainingBatch):
    """Yield (matrix, is_query) for every distinct item in a fixed order."""
    for q in batch.queries:
        yield q, True
    for p in batch.positives:
        yield p, False
    if batch.hard_negatives is not None:
        for group in batch.hard_negatives:
            for h in group:
                yield h, False


def _frozen_prune(matrix: TokenMatrix, spec: PruneSpec, assignments: np.ndarray) -> PrunedRep:
    """Mean-pool rows under a previously captured assignment map."""
    m = int(assignments.max()) + 1
    sums = np.zeros((m, matrix.d))
    np.add.at(sums, assignments, matrix.rows)
    counts = np.bincount(assignments, minlength=m).astype(np.float64)
    centroids = sums / counts[:, None]
    return PrunedRep(matrix.with_rows(centroids), source_n=matrix.n, assignments=assignments)


@dataclass
class _Forward:
    batch: TrainingBatch
    loss: float
    pruned: dict[str, PrunedRep]
    is_query: dict[str, bool]
    cand_ids: list[list[str]]
    probs: list[np.ndarray]
    argmaxes: list[list[np.ndarray]]


def _forward(
    batch: TrainingBatch,
    frozen: Optional[dict[str, Optional[np.ndarray]]] = None,
    score_transform: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
) -> _Forward:
    """Score the batch and keep every intermediate the backward pass needs.

    ``frozen`` maps item id to a cluster-assignment array (or None) from a
    previous forward pass; when given, clustering is not re-run.
    ``score_transform`` is a test seam applied to each query's raw score
    vector before the softmax.
    """
    _validate_batch(batch)
    b = batch.size
    pruned: dict[str, PrunedRep] = {}
    is_query: dict[str, bool] = {}
    for matrix, q in _batch_items(batch):
        spec = batch.query_spec if q else batch.doc_spec
        if frozen is not None and spec.is_clustering:
            rep = _frozen_prune(matrix, spec, frozen[matrix.id])
        else:
            rep = prune(matrix, spec)
        pruned[matrix.id] = rep
        is_query[matrix.id] = q

    inv_tau = 1.0 / batch.temperature
    total = 0.0
    cand_ids: list[list[str]] = []
    probs: list[np.ndarray] = []
    argmaxes: list[list[np.ndarray]] = []
    for i in range(b):
        ids = [batch.positives[i].id]
        ids += [batch.positives[j].id for j in range(b) if j != i]
        ids += [h.id for h in batch.negatives_for(i)]
        q_rows = pruned[batch.queries[i].id].matrix.rows
        scores = np.empty(len(ids))
        witnesses: list[np.ndarray] = []
        for c, cid in enumerate(ids):
            sims = q_rows @ pruned[cid].matrix.rows.T
            arg = sims.argmax(axis=1)
            s = 0.0
            for qi in range(sims.shape[0]):  # fixed accumulation order
                s += float(sims[qi, arg[qi]])
            scores[c] = s
            witnesses.append(arg)
        if score_transform is not None:
            scores = np.asarray(score_transform(i, scores), dtype=np.float64)
        logits = scores * inv_tau
        peak = logits.max()
        shifted = np.exp(logits - peak)
        denom = shifted.sum()
        total += float(peak + math.log(denom) - logits[0])
        cand_ids.append(ids)
        probs.append(shifted / denom)
        argmaxes.append(witnesses)

    return _Forward(batch, total / b, pruned, is_query, cand_ids, probs, argmaxes)


def contrastive_loss(batch: TrainingBatch) -> float:
    """Mean softmax cross-entropy of temperature-scaled Chamfer scores."""
    return _forward(batch).loss


def _source_gradient(rep: PrunedRep, spec: PruneSpec, g_pruned: np.ndarray) -> np.ndarray:
    n = rep.source_n
    g = np.zeros((n, g_pruned.shape[1]))
    if spec.strategy is Strategy.FULL:
        g[:] = g_pruned
    elif spec.strategy is Strategy.TAIL:
        g[n - rep.m :] = g_pruned
    elif spec.strategy is Strategy.KSPACE:
        g[:: spec.k] = g_pruned
    else:
        counts = np.bincount(rep.assignments, minlength=rep.m).astype(np.float64)
        g[:] = g_pruned[rep.assignments] / counts[rep.assignments][:, None]
    return g


def _gradients_from(fwd: _Forward) -> dict[str, np.ndarray]:
    batch = fwd.batch
    b = batch.size
    scale = 1.0 / (b * batch.temperature)
    g_pruned = {iid: np.zeros_like(rep.matrix.rows) for iid, rep in fwd.pruned.items()}
    for i in range(b):
        qid = batch.queries[i].id
        q_rows = fwd.pruned[qid].matrix.rows
        p = fwd.probs[i]
        for c, cid in enumerate(fwd.cand_ids[i]):
            coef = (p[c] - (1.0 if c == 0 else 0.0)) * scale
            if coef == 0.0:
                continue
            arg = fwd.argmaxes[i][c]
            c_rows = fwd.pruned[cid].matrix.rows
            g_pruned[qid] += coef * c_rows[arg]
            np.add.at(g_pruned[cid], arg, coef * q_rows)
    grads: dict[str, np.ndarray] = {}
    for iid, rep in fwd.pruned.items():
        spec = batch.query_spec if fwd.is_query[iid] else batch.doc_spec
        grads[iid] = _source_gradient(rep, spec, g_pruned[iid])
    return grads


def loss_gradients(batch: TrainingBatch) -> dict[str, np.ndarray]:
    """d(loss)/d(source token embeddings), one (n, d) array per item id.

    Chamfer witnesses and cluster assignments are held at their
    forward-pass values; dropped tokens get exact zeros and a centroid's
    gradient is split as g/|cluster| over its members.
    """
    return _gradients_from(_forward(batch))


def _perturbed(batch: TrainingBatch, item_id: str, token: int, comp: int, delta: float) -> TrainingBatch:
    def bump(m: TokenMatrix) -> TokenMatrix:
        if m.id != item_id:
            return m
        rows = m.rows.copy()
        rows[token, comp] += delta
        return m.with_rows(rows)

    hard = None
    if batch.hard_negatives is not None:
        hard = tuple(tuple(bump(h) for h in group) for group in batch.hard_negatives)
    return TrainingBatch(
        queries=tuple(bump(q) for q in batch.queries),
        positives=tuple(bump(p) for p in batch.positives),
        hard_negatives=hard,
        temperature=batch.temperature,
        query_spec=batch.query_spec,
        doc_spec=batch.doc_spec,
    )


def compare_gradients(
    batch: TrainingBatch,
    grads: dict[str, np.ndarray],
    step: float = 1e-5,
    samples: int = 64,
    seed: int = 0,
) -> GradCheckReport:
    """Central-difference comparison against a supplied gradient map.

    Sampled coordinates are drawn without replacement when the pool is
    small enough, so tiny batches get full coverage. Each evaluation
    re-freezes cluster assignments to the unperturbed forward pass.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    fwd = _forward(batch)
    frozen = {iid: rep.assignments for iid, rep in fwd.pruned.items()}

    coords: list[tuple[str, int, int]] = []
    for matrix, _ in _batch_items(batch):
        for t in range(matrix.n):
            for c in range(matrix.d):
                coords.append((matrix.id, t, c))
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    if samples < len(coords):
        picked = rng.choice(len(coords), size=samples, replace=False)
        chosen = [coords[int(j)] for j in picked]
    else:
        chosen = coords

    worst = (-1.0, ("", 0, 0), 0.0, 0.0)
    for iid, t, c in chosen:
        up = _forward(_perturbed(batch, iid, t, c, +step), frozen).loss
        down = _forward(_perturbed(batch, iid, t, c, -step), frozen).loss
        numeric = (up - down) / (2.0 * step)
        analytic = float(grads[iid][t, c])
        rel = abs(analytic - numeric) / (abs(analytic) + abs(numeric) + _TINY)
        if rel > worst[0]:
            worst = (rel, (iid, t, c), analytic, numeric)
    return GradCheckReport(
        max_rel_error=worst[0],
        worst_coordinate=worst[1],
        analytic=worst[2],
        numeric=worst[3],
        step=step,
    )


def grad_check(
    batch: TrainingBatch, step: float = 1e-5, samples: int = 64, seed: int = 0
) -> GradCheckReport:
    """Finite-difference verification of :func:`loss_gradients`."""
    return compare_gradients(batch, loss_gradients(batch), step=step, samples=samples, seed=seed)


@dataclass
class SgdResult:
    embeddings: dict[str, np.ndarray]
    loss_trace: list[float]


def sgd_fit(
    batch_source: Callable[[int, np.random.Generator, dict[str, np.ndarray]], TrainingBatch],
    params: dict[str, np.ndarray],
    learning_rate: float,
    steps: int,
    seed: int,
) -> SgdResult:
    """Plain gradient descent on the token embeddings themselves.

    ``params`` maps item id to its (n, d) embedding array and is updated
    in place; ``batch_source`` builds each step's batch from the current
    parameters (clustered specs therefore re-cluster every step). The
    loss trace records the forward value before each update.
    """
    if learning_rate < 0.0:
        raise ValueError("learning_rate must be >= 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    trace: list[float] = []
    for step in range(steps):
        batch = batch_source(step, rng, params)
        fwd = _forward(batch)
        trace.append(fwd.loss)
        for iid, g in _gradients_from(fwd).items():
            params[iid] = params[iid] - learning_rate * g
    return SgdResult(params, trace)
