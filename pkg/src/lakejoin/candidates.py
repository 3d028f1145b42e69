"""Candidate generation: three retrieval strategies plus a tagged merge."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import Mode
from .datalake import ColumnProfile, ColumnRef
from .errors import ConfigError
from .indexes import (
    IndexBundle,
    capped_distinct_values,
    hamming_distance,
    knn_query,
    minhash_signature,
    query_overlap_topk,
)


class Provenance(str, Enum):
    SYNTACTIC = "syntactic"
    METADATA = "metadata"
    VALUE_SEMANTIC = "value_semantic"


@dataclass
class CandidateSet:
    """Merged, duplicate-free candidates with per-strategy provenance tags.

    Iteration order is provenance count descending (columns found by more
    strategies first), then ColumnRef ascending.
    """

    query: ColumnRef
    candidates: list[ColumnRef]
    provenance: dict[ColumnRef, frozenset[Provenance]]


def syntactic_candidates(
    bundle: IndexBundle,
    query_profile: ColumnProfile,
    top_n: int,
    mode: Mode | None = None,
) -> list[ColumnRef]:
    """Columns with the highest value overlap with the query.

    Exact mode ranks by inverted-index overlap counts; minhash mode ranks
    by ascending hamming distance between signatures.
    """
    mode = mode or bundle.config.mode
    if mode == Mode.EXACT:
        if bundle.inverted is None:
            raise ConfigError("bundle has no inverted index; rebuild with --mode exact")
        values = capped_distinct_values(
            query_profile, bundle.inverted.row_cap, bundle.config.seed
        )
        hits = query_overlap_topk(bundle.inverted, values, top_n, exclude=query_profile.ref)
        return [ref for ref, _ in hits]
    if not bundle.minhash:
        raise ConfigError("bundle has no minhash signatures")
    qsig = bundle.signature_for(query_profile)
    if qsig.is_empty:
        return []
    scored = [
        (hamming_distance(qsig, sig), ref)
        for ref, sig in bundle.minhash.items()
        if ref != query_profile.ref and not sig.is_empty
    ]
    scored.sort()
    return [ref for _, ref in scored[:top_n]]


def metadata_candidates(
    bundle: IndexBundle,
    query_sentence: str,
    provider,
    top_n: int,
    exclude: ColumnRef | None = None,
) -> list[ColumnRef]:
    """Columns whose metadata sentences embed closest to the query's."""
    vec = provider.embed([query_sentence])[0]
    return [ref for ref, _ in knn_query(bundle.meta_index, vec, top_n, exclude=exclude)]


def value_candidates(
    bundle: IndexBundle,
    query_value_sentence: str,
    provider,
    top_n: int,
    exclude: ColumnRef | None = None,
) -> list[ColumnRef]:
    """Columns whose concatenated-value sentences embed closest to the query's."""
    vec = provider.embed([query_value_sentence])[0]
    return [ref for ref, _ in knn_query(bundle.value_index, vec, top_n, exclude=exclude)]


def merge_candidates(
    syntactic: list[ColumnRef],
    metadata: list[ColumnRef],
    value_semantic: list[ColumnRef],
    query: ColumnRef,
) -> CandidateSet:
    """Union of the three strategy lists with provenance tags; no drops."""
    tags: dict[ColumnRef, set[Provenance]] = {}
    for tag, refs in (
        (Provenance.SYNTACTIC, syntactic),
        (Provenance.METADATA, metadata),
        (Provenance.VALUE_SEMANTIC, value_semantic),
    ):
        for ref in refs:
            if ref == query:
                continue
            tags.setdefault(ref, set()).add(tag)
    ordered = sorted(tags, key=lambda ref: (-len(tags[ref]), ref))
    return CandidateSet(
        query=query,
        candidates=ordered,
        provenance={ref: frozenset(s) for ref, s in tags.items()},
    )
