"""Core data types: token matrices, pruning specs, pruned representations.

A text (query or document) is represented by a :class:`TokenMatrix`, an
ordered set of per-token embedding vectors. Embeddings are stored at
32-bit precision on disk but all arithmetic in this package runs at
64-bit so that gradient checks have numerical headroom.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, EmptyMatrix, InvalidFraction, NonFinite


class ZeroVectorWarning(UserWarning):
    """Emitted when normalization encounters all-zero rows."""


def _as_array(rows) -> np.ndarray:
    """Coerce nested sequences to a float64 array, or an object array if ragged."""
    if isinstance(rows, np.ndarray) and rows.dtype != object:
        return rows.astype(np.float64, copy=False)
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (ValueError, TypeError):
        # ragged input; keep per-row structure so validate() can locate it
        return np.asarray(rows, dtype=object)
    return arr


@dataclass(frozen=True)
class TokenMatrix:
    """One text's token embeddings, rows in original token order.

    Row order is load-bearing: positional pruning (tail, spacing) selects
    by index. Instances are immutable; the backing array is marked
    read-only so they can be shared across threads.
    """

    id: str
    rows: np.ndarray

    def __post_init__(self):
        arr = _as_array(self.rows)
        if arr.dtype != object:
            arr = np.atleast_1d(arr)
            arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def d(self) -> int:
        return int(self.rows.shape[1]) if self.rows.ndim == 2 else 0

    def with_rows(self, rows: np.ndarray) -> "TokenMatrix":
        return TokenMatrix(self.id, rows)


def validate(matrix: TokenMatrix) -> None:
    """Check all TokenMatrix invariants, raising on the first violation.

    Raises EmptyMatrix for zero rows, DimensionMismatch for ragged rows
    (naming the first offending row), and NonFinite for NaN/Inf components
    (naming the row). Idempotent and side-effect free.
    """
    rows = matrix.rows
    if rows.shape[0] == 0:
        raise EmptyMatrix(f"matrix {matrix.id!r} has no rows")
    if rows.dtype == object:
        widths = [np.size(r) for r in rows]
        for i, w in enumerate(widths):
            if w != widths[0]:
                raise DimensionMismatch(
                    f"matrix {matrix.id!r}: row {i} has {w} components, expected {widths[0]}"
                )
        # uniform widths but object dtype: non-numeric content
        raise DimensionMismatch(f"matrix {matrix.id!r}: rows are not numeric vectors")
    if rows.ndim != 2:
        raise DimensionMismatch(f"matrix {matrix.id!r}: rows must be 2-dimensional")
    if rows.shape[1] < 1:
        raise DimensionMismatch(f"matrix {matrix.id!r}: embedding dimension is 0")
    finite = np.isfinite(rows)
    if not finite.all():
        bad = int(np.nonzero(~finite.all(axis=1))[0][0])
        raise NonFinite(f"matrix {matrix.id!r}: non-finite component in row {bad}")


def l2_normalize(matrix: TokenMatrix) -> TokenMatrix:
    """Scale every row to unit Euclidean norm.

    Zero rows have no direction; they are left unchanged and reported
    through a ZeroVectorWarning rather than treated as an error.
    """
    validate(matrix)
    rows = matrix.rows
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        idx = np.nonzero(zero)[0].tolist()
        warnings.warn(
            f"matrix {matrix.id!r}: zero rows left unnormalized at indices {idx}",
            ZeroVectorWarning,
            stacklevel=2,
        )
    safe = np.where(zero, 1.0, norms)
    return matrix.with_rows(rows / safe[:, None])


class Strategy(Enum):
    FULL = "full"
    TAIL = "tail"
    KSPACE = "kspace"
    CLUSTER_FIXED = "cfixed"
    CLUSTER_RELATIVE = "crel"


#: strategies whose output rows are k-means centroids
CLUSTERING = (Strategy.CLUSTER_FIXED, Strategy.CLUSTER_RELATIVE)


@dataclass(frozen=True)
class PruneSpec:
    """Which pruning strategy to apply to one side (query or document).

    ``seed`` feeds the clustering RNG and is ignored by the positional
    strategies. ``normalize`` L2-normalizes rows before any pruning or
    scoring, so clustering happens in the same geometry scoring uses.
    """

    strategy: Strategy
    k: Optional[int] = None
    fraction: Optional[float] = None
    seed: int = 0
    normalize: bool = False

    def __post_init__(self):
        if self.strategy in (Strategy.TAIL, Strategy.KSPACE, Strategy.CLUSTER_FIXED):
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.strategy.value} requires k >= 1, got {self.k}")
        if self.strategy is Strategy.CLUSTER_RELATIVE:
            if self.fraction is None or not (0.0 < self.fraction <= 1.0):
                raise InvalidFraction(f"fraction must be in (0, 1], got {self.fraction}")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    # -- canonical text encoding used by the CLI and config files --------

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "PruneSpec":
        """Parse the canonical encoding: ``full``, ``tail:K``, ``kspace:K``,
        ``cfixed:K``, ``crel:F``, each with optional ``+norm`` suffix."""
        raw = text.strip()
        normalize = False
        if raw.endswith("+norm"):
            normalize = True
            raw = raw[: -len("+norm")]
        name, _, arg = raw.partition(":")
        try:
            if name == "full":
                if arg:
                    raise ValueError("full takes no parameter")
                return cls(Strategy.FULL, seed=seed, normalize=normalize)
            if name == "tail":
                return cls(Strategy.TAIL, k=int(arg), seed=seed, normalize=normalize)
            if name == "kspace":
                return cls(Strategy.KSPACE, k=int(arg), seed=seed, normalize=normalize)
            if name == "cfixed":
                return cls(Strategy.CLUSTER_FIXED, k=int(arg), seed=seed, normalize=normalize)
            if name == "crel":
                return cls(
                    Strategy.CLUSTER_RELATIVE, fraction=float(arg), seed=seed, normalize=normalize
                )
        except InvalidFraction:
            raise
        except ValueError as exc:
            raise ValueError(f"bad prune spec {text!r}: {exc}") from None
        raise ValueError(f"unknown prune strategy {text!r}")

    def encode(self) -> str:
        if self.strategy is Strategy.FULL:
            body = "full"
        elif self.strategy is Strategy.CLUSTER_RELATIVE:
            body = f"crel:{self.fraction:g}"
        else:
            body = f"{self.strategy.value}:{self.k}"
        return body + ("+norm" if self.normalize else "")

    @property
    def is_clustering(self) -> bool:
        return self.strategy in CLUSTERING

    @classmethod
    def full(cls, normalize: bool = False) -> "PruneSpec":
        return cls(Strategy.FULL, normalize=normalize)

    @classmethod
    def tail(cls, k: int, normalize: bool = False) -> "PruneSpec":
        return cls(Strategy.TAIL, k=k, normalize=normalize)

    @classmethod
    def kspace(cls, k: int, normalize: bool = False) -> "PruneSpec":
        return cls(Strategy.KSPACE, k=k, normalize=normalize)

    @classmethod
    def cluster_fixed(cls, k: int, seed: int = 0, normalize: bool = False) -> "PruneSpec":
        return cls(Strategy.CLUSTER_FIXED, k=k, seed=seed, normalize=normalize)

    @classmethod
    def cluster_relative(cls, fraction: float, seed: int = 0, normalize: bool = False) -> "PruneSpec":
        return cls(Strategy.CLUSTER_RELATIVE, fraction=fraction, seed=seed, normalize=normalize)


@dataclass(frozen=True)
class PrunedRep:
    """A reduced representation plus provenance.

    ``assignments`` maps each original token index to an output row index
    and is present only for the clustering strategies. Every output row of
    a clustered representation is the arithmetic mean of its assigned
    source rows.
    """

    matrix: TokenMatrix
    source_n: int
    assignments: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.assignments is not None:
            arr = np.asarray(self.assignments, dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, "assignments", arr)

    @property
    def m(self) -> int:
        return self.matrix.n
