"""Multi-vector retrieval toolkit.

Chamfer (MaxSim) scoring between token-embedding sets, token pruning by
position or by seeded k-means clustering, a desk-scale contrastive loss
with verified analytic gradients, and a brute-force retrieval +
NDCG@10 + compression-statistics harness.
"""

from .chamfer import ScoredHit, chamfer_batch, chamfer_fast, chamfer_naive
from .core import (
    PrunedRep,
    PruneSpec,
    Strategy,
    TokenMatrix,
    ZeroVectorWarning,
    l2_normalize,
    validate,
)
from .errors import (
    CrispError,
    DegenerateBatch,
    DimensionMismatch,
    EmptyCorpus,
    EmptyMatrix,
    InvalidFraction,
    KTooLarge,
    NoJudgedQueries,
    NonFinite,
    ParseError,
)
from .evaluation import EvalReport, evaluate, load_qrels, load_run, ndcg_at_k, ndcg_per_query, search, write_run
from .clustering import KMeansResult, kmeans, kmeanspp_init, lloyd
from .loss import (
    GradCheckReport,
    SgdResult,
    TrainingBatch,
    compare_gradients,
    contrastive_loss,
    grad_check,
    loss_gradients,
    sgd_fit,
)
from .pruning import (
    cluster_prune_fixed,
    cluster_prune_relative,
    kspace_prune,
    prune,
    prune_corpus,
    tail_prune,
)
from .stats import (
    TokenStats,
    bundled_token_stats,
    compression_rate,
    load_token_stats,
    table_averages,
    table_rel_size,
)

__version__ = "0.1.0"

__all__ = [
    "CrispError",
    "DegenerateBatch",
    "DimensionMismatch",
    "EmptyCorpus",
    "EmptyMatrix",
    "EvalReport",
    "GradCheckReport",
    "InvalidFraction",
    "KMeansResult",
    "KTooLarge",
    "NoJudgedQueries",
    "NonFinite",
    "ParseError",
    "PruneSpec",
    "PrunedRep",
    "ScoredHit",
    "SgdResult",
    "Strategy",
    "TokenMatrix",
    "TokenStats",
    "TrainingBatch",
    "ZeroVectorWarning",
    "bundled_token_stats",
    "chamfer_batch",
    "chamfer_fast",
    "chamfer_naive",
    "cluster_prune_fixed",
    "cluster_prune_relative",
    "compare_gradients",
    "compression_rate",
    "contrastive_loss",
    "evaluate",
    "grad_check",
    "kmeans",
    "kmeanspp_init",
    "kspace_prune",
    "l2_normalize",
    "lloyd",
    "load_qrels",
    "load_run",
    "load_token_stats",
    "loss_gradients",
    "ndcg_at_k",
    "ndcg_per_query",
    "prune",
    "prune_corpus",
    "search",
    "sgd_fit",
    "table_averages",
    "table_rel_size",
    "tail_prune",
    "validate",
    "write_run",
]
