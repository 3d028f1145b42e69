"""The seven preference criteria and decision-matrix assembly.

Each merged candidate is scored on: unique-value ratio, value overlap
with the query (exact or signature-based), estimated left/right join
cardinalities (cost criteria: smaller is better), and three embedding
similarities (frequent values, disjoint values, metadata).  The two
value-semantics criteria apply to string columns only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .config import CRITERION_IDS, EngineConfig, Mode
from .datalake import ColumnProfile, ColumnType, build_value_sentence
from .embedder import cosine_similarity
from .errors import ConfigError, ProviderError
from .indexes import hamming_distance
from .topsis import DecisionMatrix, Direction

if TYPE_CHECKING:
    from .candidates import CandidateSet
    from .indexes import IndexBundle


class CriterionId(str, Enum):
    UNIQUE_VALUES = "unique_values"
    INTERSECTION_SIZE = "intersection_size"
    JOIN_SIZE = "join_size"
    REVERSE_JOIN_SIZE = "reverse_join_size"
    VALUE_SEMANTICS = "value_semantics"
    DISJOINT_VALUE_SEMANTICS = "disjoint_value_semantics"
    METADATA_SEMANTICS = "metadata_semantics"


COST_CRITERIA = frozenset({CriterionId.JOIN_SIZE, CriterionId.REVERSE_JOIN_SIZE})
STRING_ONLY_CRITERIA = frozenset(
    {CriterionId.VALUE_SEMANTICS, CriterionId.DISJOINT_VALUE_SEMANTICS}
)

assert tuple(c.value for c in CriterionId) == CRITERION_IDS


def direction_for(criterion: CriterionId) -> Direction:
    return Direction.COST if criterion in COST_CRITERIA else Direction.BENEFIT


@dataclass
class CriterionSpec:
    id: CriterionId
    direction: Direction
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ConfigError(f"criterion weight must be non-negative, got {self.weight}")
        if self.direction != direction_for(self.id):
            raise ConfigError(
                f"criterion {self.id.value} must have direction {direction_for(self.id).value}"
            )


def default_criteria(raw_weights: dict[str, float]) -> list[CriterionSpec]:
    """Specs for all seven criteria with raw (un-normalized) weights."""
    return [
        CriterionSpec(id=cid, direction=direction_for(cid), weight=raw_weights[cid.value])
        for cid in CriterionId
    ]


@dataclass
class PreferenceVector:
    """Raw criterion scores for one candidate, with applicability flags."""

    candidate: object
    scores: dict[CriterionId, float]
    applicable: dict[CriterionId, bool]


# ---------------------------------------------------------------------------
# Individual criteria
# ---------------------------------------------------------------------------


def unique_values_score(profile: ColumnProfile) -> float:
    """Distinct-to-total ratio; 1.0 marks a primary-key-like column."""
    if profile.total_rows == 0:
        return 0.0
    return profile.distinct_count / profile.total_rows


def intersection_size_score(
    query: ColumnProfile,
    cand: ColumnProfile,
    bundle: "IndexBundle",
    mode: Mode,
) -> float:
    """Value overlap: exact set intersection, or signature agreement.

    Exact mode counts shared distinct sampled values.  Minhash mode keeps
    the hamming-distance basis and scores num_perm - hamming, so higher
    still means more similar.
    """
    if mode == Mode.EXACT:
        return float(len(query.distinct_values & cand.distinct_values))
    qsig = bundle.signature_for(query)
    csig = bundle.minhash.get(cand.ref)
    if csig is None or csig.is_empty or qsig.is_empty:
        return 0.0
    return float(qsig.num_perm - hamming_distance(qsig, csig))


def join_size_estimate(query: ColumnProfile, cand: ColumnProfile) -> float:
    """Estimated left-join cardinality.

    Classical distinct-value estimate |Q|*|T| / max(d_Q, d_T), floored at
    |Q| because a left join keeps every outer row.
    """
    nq, nt = query.total_rows, cand.total_rows
    d = max(query.distinct_count, cand.distinct_count)
    if d == 0:
        return float(nq)
    return float(max(nq, nq * nt / d))


def reverse_join_size_estimate(query: ColumnProfile, cand: ColumnProfile) -> float:
    """Estimated right-join cardinality: the left-join estimate with roles swapped."""
    return join_size_estimate(cand, query)


def _both_string(query: ColumnProfile, cand: ColumnProfile) -> bool:
    return (
        query.inferred_type == ColumnType.STRING and cand.inferred_type == ColumnType.STRING
    )


def value_semantics_score(
    query: ColumnProfile,
    cand: ColumnProfile,
    provider,
    frequent_count: int = 20,
) -> float:
    """Cosine similarity of the two columns' frequent-value sentences.

    String columns only; numbers and dates carry no value semantics here.
    """
    if not _both_string(query, cand):
        return 0.0
    sentences = [
        build_value_sentence(query, frequent_count),
        build_value_sentence(cand, frequent_count),
    ]
    vectors = provider.embed(sentences)
    return cosine_similarity(vectors[0], vectors[1])


def disjoint_value_sets(
    query: ColumnProfile, cand: ColumnProfile, sample_size: int
) -> tuple[list[str], list[str]]:
    """Deterministic samples of the two set differences, most frequent first."""
    cand_values = cand.distinct_values
    query_values = query.distinct_values
    query_only = [v for v, _ in query.frequent_values if v not in cand_values][:sample_size]
    cand_only = [v for v, _ in cand.frequent_values if v not in query_values][:sample_size]
    return query_only, cand_only


def disjoint_value_semantics_score(
    query: ColumnProfile,
    cand: ColumnProfile,
    provider,
    sample_size: int = 50,
) -> float:
    """Similarity of the values each column does NOT share with the other.

    An empty difference set means one column is contained in the other,
    the ideal join case, scored 1.0.
    """
    if not _both_string(query, cand):
        return 0.0
    query_only, cand_only = disjoint_value_sets(query, cand, sample_size)
    if not query_only or not cand_only:
        return 1.0
    vectors = provider.embed([", ".join(query_only), ", ".join(cand_only)])
    return cosine_similarity(vectors[0], vectors[1])


def metadata_semantics_score(query_sentence: str, cand_sentence: str, provider) -> float:
    """Cosine similarity of the two metadata-sentence embeddings."""
    vectors = provider.embed([query_sentence, cand_sentence])
    return cosine_similarity(vectors[0], vectors[1])


# ---------------------------------------------------------------------------
# Matrix assembly
# ---------------------------------------------------------------------------


def active_criteria(
    specs: list[CriterionSpec], query_type: ColumnType
) -> list[CriterionSpec]:
    """Drop criteria inapplicable to the query's type, renormalize weights.

    The string-only criteria disappear as whole columns under a numeric
    or date query; the remaining weights are rescaled to sum to 1.
    """
    kept = [
        s for s in specs if query_type == ColumnType.STRING or s.id not in STRING_ONLY_CRITERIA
    ]
    total = sum(s.weight for s in kept)
    if total <= 0:
        raise ConfigError("active criterion weights sum to zero; nothing to rank on")
    return [CriterionSpec(id=s.id, direction=s.direction, weight=s.weight / total) for s in kept]


class CandidateScorer:
    """Scores candidates against one query, batching provider calls.

    Metadata vectors come from the bundle's sentence index; the query-side
    embeddings are computed once.  A provider failure marks the affected
    semantic criterion inapplicable (scored 0) instead of aborting.
    """

    def __init__(
        self,
        query: ColumnProfile,
        bundle: "IndexBundle",
        provider,
        query_meta_sentence: str,
        mode: Mode | None = None,
    ):
        self.query = query
        self.bundle = bundle
        self.provider = provider
        self.config: EngineConfig = bundle.config
        self.mode = mode or self.config.mode
        self.query_is_string = query.inferred_type == ColumnType.STRING
        self._query_meta_vec = self._try_embed_one(query_meta_sentence)
        self._query_value_vec = None
        if self.query_is_string:
            sentence = build_value_sentence(query, self.config.frequent_value_count)
            self._query_value_vec = self._try_embed_one(sentence)

    def _try_embed_one(self, text: str):
        try:
            return self.provider.embed([text])[0]
        except ProviderError:
            return None

    def _value_semantics(self, cand: ColumnProfile) -> tuple[float, bool]:
        if not self.query_is_string or cand.inferred_type != ColumnType.STRING:
            return 0.0, False
        if self._query_value_vec is None:
            return 0.0, False
        sentence = build_value_sentence(cand, self.config.frequent_value_count)
        vec = self._try_embed_one(sentence)
        if vec is None:
            return 0.0, False
        return cosine_similarity(self._query_value_vec, vec), True

    def _disjoint_semantics(self, cand: ColumnProfile) -> tuple[float, bool]:
        if not self.query_is_string or cand.inferred_type != ColumnType.STRING:
            return 0.0, False
        query_only, cand_only = disjoint_value_sets(
            self.query, cand, self.config.disjoint_sample_size
        )
        if not query_only or not cand_only:
            return 1.0, True
        try:
            vectors = self.provider.embed([", ".join(query_only), ", ".join(cand_only)])
        except ProviderError:
            return 0.0, False
        return cosine_similarity(vectors[0], vectors[1]), True

    def _metadata_semantics(self, cand_ref) -> tuple[float, bool]:
        if self._query_meta_vec is None:
            return 0.0, False
        cached = self.bundle.meta_index.vector_for(cand_ref)
        if cached is None:
            return 0.0, False
        return cosine_similarity(self._query_meta_vec, cached), True

    def score(self, cand_ref) -> PreferenceVector:
        cand = self.bundle.catalog.resolve(cand_ref)
        scores: dict[CriterionId, float] = {}
        applicable: dict[CriterionId, bool] = {}

        scores[CriterionId.UNIQUE_VALUES] = unique_values_score(cand)
        applicable[CriterionId.UNIQUE_VALUES] = True

        if self.mode == Mode.MINHASH:
            csig = self.bundle.minhash.get(cand_ref)
            ok = csig is not None and not csig.is_empty
        else:
            ok = True
        scores[CriterionId.INTERSECTION_SIZE] = intersection_size_score(
            self.query, cand, self.bundle, self.mode
        )
        applicable[CriterionId.INTERSECTION_SIZE] = ok

        scores[CriterionId.JOIN_SIZE] = join_size_estimate(self.query, cand)
        applicable[CriterionId.JOIN_SIZE] = True
        scores[CriterionId.REVERSE_JOIN_SIZE] = reverse_join_size_estimate(self.query, cand)
        applicable[CriterionId.REVERSE_JOIN_SIZE] = True

        value_score, value_ok = self._value_semantics(cand)
        scores[CriterionId.VALUE_SEMANTICS] = value_score
        applicable[CriterionId.VALUE_SEMANTICS] = value_ok

        disjoint_score, disjoint_ok = self._disjoint_semantics(cand)
        scores[CriterionId.DISJOINT_VALUE_SEMANTICS] = disjoint_score
        applicable[CriterionId.DISJOINT_VALUE_SEMANTICS] = disjoint_ok

        meta_score, meta_ok = self._metadata_semantics(cand_ref)
        scores[CriterionId.METADATA_SEMANTICS] = meta_score
        applicable[CriterionId.METADATA_SEMANTICS] = meta_ok

        return PreferenceVector(candidate=cand_ref, scores=scores, applicable=applicable)


def build_decision_matrix(
    query: ColumnProfile,
    cands: "CandidateSet",
    bundle: "IndexBundle",
    provider,
    specs: list[CriterionSpec] | None = None,
    query_meta_sentence: str = "",
    mode: Mode | None = None,
) -> DecisionMatrix | None:
    """One row per candidate over the active criteria; None when empty.

    Criteria inapplicable for the query's type are dropped as columns and
    the remaining weights renormalized; a criterion inapplicable for an
    individual candidate scores 0 in that cell so the matrix stays
    rectangular.
    """
    if not cands.candidates:
        return None
    if specs is None:
        specs = default_criteria(bundle.config.raw_weights())
    kept = active_criteria(specs, query.inferred_type)
    scorer = CandidateScorer(query, bundle, provider, query_meta_sentence, mode=mode)
    vectors = [scorer.score(ref) for ref in cands.candidates]
    matrix = np.array(
        [[v.scores[s.id] for s in kept] for v in vectors], dtype=np.float64
    )
    return DecisionMatrix(refs=list(cands.candidates), scores=matrix, criteria=kept)
