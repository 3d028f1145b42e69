"""Joinable-column search over CSV data lakes.

Finds, for a query column, the top-k columns in a lake that are worth
joining on: value overlap, semantic similarity of values and metadata,
and join-size preferences combined through closeness-to-ideal ranking.
"""

from .candidates import CandidateSet, Provenance, merge_candidates
from .config import EngineConfig, Mode
from .criteria import CriterionId, CriterionSpec, build_decision_matrix
from .datalake import (
    ColumnProfile,
    ColumnRef,
    ColumnType,
    DataLakeCatalog,
    QuerySpec,
    TableMeta,
    build_catalog,
    build_metadata_sentence,
    build_value_sentence,
    infer_column_type,
    normalize_value,
    parse_csv_table,
    profile_column,
)
from .embedder import (
    BuiltinEmbedder,
    EmbeddingProviderConfig,
    ProviderKind,
    RemoteEmbedder,
    build_provider,
    cosine_similarity,
    embed_texts,
)
from .engine import RankedResult, RankedRow, search
from .errors import (
    BundleFormatError,
    ConfigError,
    DataError,
    LakejoinError,
    ProtocolError,
    ProviderError,
    ValidationError,
)
from .evaluation import (
    EvalReport,
    GroundTruth,
    average_precision,
    evaluate,
    load_ground_truth,
    recall_at_k,
    reciprocal_rank,
)
from .indexes import (
    EmbeddingIndex,
    IndexBundle,
    InvertedIndex,
    MinHashSignature,
    build_bundle,
    build_inverted_index,
    hamming_distance,
    knn_query,
    load_bundle,
    minhash_signature,
    persist_bundle,
    query_overlap_topk,
)
from .topsis import DecisionMatrix, Direction, TopsisResult, topsis_rank

__version__ = "0.1.0"
