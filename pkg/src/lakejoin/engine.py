"""The search pipeline: candidates, preference scoring, closeness ranking."""

from __future__ import annotations

from dataclasses import dataclass

from .candidates import (
    CandidateSet,
    merge_candidates,
    metadata_candidates,
    syntactic_candidates,
    value_candidates,
)
from .config import EngineConfig, Mode
from .criteria import build_decision_matrix, default_criteria
from .datalake import ColumnProfile, ColumnRef, QuerySpec, build_value_sentence
from .indexes import IndexBundle
from .topsis import topsis_rank


@dataclass
class RankedRow:
    rank: int
    ref: ColumnRef
    closeness: float
    scores: dict[str, float]
    provenance: list[str]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "table_id": self.ref.table_id,
            "column_name": self.ref.column_name,
            "closeness": self.closeness,
            "scores": self.scores,
            "provenance": self.provenance,
        }


@dataclass
class RankedResult:
    """Top-k joinable columns for one query, with per-criterion breakdown."""

    query: ColumnRef
    k: int
    mode: Mode
    rows: list[RankedRow]
    config: EngineConfig

    def ranking(self) -> list[ColumnRef]:
        return [row.ref for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "query": {"table_id": self.query.table_id, "column_name": self.query.column_name},
            "k": self.k,
            "mode": self.mode.value,
            "config": self.config.to_dict(),
            "rows": [row.to_dict() for row in self.rows],
        }


def generate_candidates(
    bundle: IndexBundle,
    provider,
    query_profile: ColumnProfile,
    query_meta_sentence: str,
    top_n: int,
    mode: Mode | None = None,
) -> CandidateSet:
    """Run the three strategies against the bundle and merge their hits."""
    syntactic = syntactic_candidates(bundle, query_profile, top_n, mode=mode)
    metadata = metadata_candidates(
        bundle, query_meta_sentence, provider, top_n, exclude=query_profile.ref
    )
    value_sentence = build_value_sentence(query_profile, bundle.config.value_sentence_max)
    values = value_candidates(
        bundle, value_sentence, provider, top_n, exclude=query_profile.ref
    )
    return merge_candidates(syntactic, metadata, values, query_profile.ref)


def search(
    bundle: IndexBundle,
    provider,
    query_profile: ColumnProfile,
    query_meta_sentence: str,
    spec: QuerySpec,
) -> RankedResult:
    """Candidate generation followed by closeness ranking; deterministic.

    ``spec`` may override k, the per-criterion weights, and the candidate
    mode.  An empty candidate set yields an empty result, not an error.
    """
    config = bundle.config.with_overrides(k=spec.k, weights=spec.weights, mode=spec.mode)
    cands = generate_candidates(
        bundle, provider, query_profile, query_meta_sentence,
        config.top_n_per_strategy, mode=config.mode,
    )
    if not cands.candidates:
        return RankedResult(query=query_profile.ref, k=config.k, mode=config.mode, rows=[], config=config)
    specs = default_criteria(config.raw_weights())
    matrix = build_decision_matrix(
        query_profile,
        cands,
        bundle,
        provider,
        specs=specs,
        query_meta_sentence=query_meta_sentence,
        mode=config.mode,
    )
    result = topsis_rank(matrix)
    criterion_of = {i: s.id for i, s in enumerate(matrix.criteria)}
    row_of = {ref: i for i, ref in enumerate(matrix.refs)}
    rows = []
    for rank, (ref, closeness, _, _) in enumerate(result.ranking[: config.k], start=1):
        raw = matrix.scores[row_of[ref]]
        rows.append(
            RankedRow(
                rank=rank,
                ref=ref,
                closeness=closeness,
                scores={criterion_of[i].value: float(raw[i]) for i in range(len(raw))},
                provenance=sorted(tag.value for tag in cands.provenance[ref]),
            )
        )
    return RankedResult(query=query_profile.ref, k=config.k, mode=config.mode, rows=rows, config=config)
