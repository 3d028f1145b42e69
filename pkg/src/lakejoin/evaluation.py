"""Search-quality metrics: reciprocal rank, average precision, recall at k.

Ground truth arrives as JSON Lines, one labelled column pair per line::

    {"query_table": ..., "query_column": ..., "target_table": ...,
     "target_column": ..., "label": 0 or 1}

Queries whose relevant set is empty are reported but excluded from the
aggregate means; queries missing from the engine results count with
all-zero metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .datalake import ColumnRef
from .errors import DataError

FLAG_EMPTY_RELEVANT = "empty_relevant"
FLAG_MISSING_RESULTS = "missing_results"


def reciprocal_rank(ranking: list[ColumnRef], relevant: set[ColumnRef], k: int) -> float:
    """1/rank of the first relevant item within the top k; 0 if none."""
    for position, ref in enumerate(ranking[:k], start=1):
        if ref in relevant:
            return 1.0 / position
    return 0.0


def average_precision(ranking: list[ColumnRef], relevant: set[ColumnRef], k: int) -> float:
    """Truncated AP: mean precision at each relevant rank <= k.

    The denominator min(|relevant|, k) keeps a perfect truncated ranking
    at exactly 1.0.
    """
    if not relevant:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for position, ref in enumerate(ranking[:k], start=1):
        if ref in relevant:
            hits += 1
            precision_sum += hits / position
    return precision_sum / min(len(relevant), k)


def recall_at_k(ranking: list[ColumnRef], relevant: set[ColumnRef], k: int) -> float:
    """Fraction of the relevant set retrieved in the top k."""
    if not relevant:
        return 0.0
    return len(set(ranking[:k]) & relevant) / len(relevant)


@dataclass
class GroundTruth:
    """Relevant columns per query; a query may have an empty set (flagged later)."""

    entries: dict[ColumnRef, set[ColumnRef]] = field(default_factory=dict)


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Parse a JSONL truth file; malformed lines raise with their line number."""
    path = Path(path)
    truth = GroundTruth()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"{path}: cannot read truth file: {exc}") from exc
    required = ("query_table", "query_column", "target_table", "target_column", "label")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        missing = [key for key in required if key not in record]
        if missing:
            raise DataError(f"{path}:{lineno}: missing fields {missing}")
        label = record["label"]
        if label not in (0, 1):
            raise DataError(f"{path}:{lineno}: label must be 0 or 1, got {label!r}")
        query = ColumnRef(str(record["query_table"]), str(record["query_column"]))
        target = ColumnRef(str(record["target_table"]), str(record["target_column"]))
        truth.entries.setdefault(query, set())
        if label == 1:
            truth.entries[query].add(target)
    return truth


@dataclass
class QueryMetrics:
    query: ColumnRef
    reciprocal_rank: float
    average_precision: float
    recall_at_k: float
    flag: str | None = None


@dataclass
class EvalReport:
    """Per-query metrics plus unweighted means over the evaluated queries."""

    k: int
    per_query: list[QueryMetrics]
    mrr: float
    map: float
    recall: float
    evaluated_queries: int
    skipped_queries: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "aggregate": {"mrr": self.mrr, "map": self.map, "recall": self.recall},
            "evaluated_queries": self.evaluated_queries,
            "skipped_queries": self.skipped_queries,
            "per_query": [
                {
                    "query_table": m.query.table_id,
                    "query_column": m.query.column_name,
                    "reciprocal_rank": m.reciprocal_rank,
                    "average_precision": m.average_precision,
                    "recall_at_k": m.recall_at_k,
                    "flag": m.flag,
                }
                for m in self.per_query
            ],
        }


def evaluate(
    results: dict[ColumnRef, list[ColumnRef]],
    truth: GroundTruth,
    k: int,
) -> EvalReport:
    """Score engine rankings against ground truth.

    Aggregates are arithmetic means over queries with a non-empty relevant
    set; a query absent from ``results`` contributes zeros and is flagged.
    """
    per_query: list[QueryMetrics] = []
    included: list[QueryMetrics] = []
    for query in sorted(truth.entries):
        relevant = truth.entries[query]
        if not relevant:
            per_query.append(QueryMetrics(query, 0.0, 0.0, 0.0, flag=FLAG_EMPTY_RELEVANT))
            continue
        ranking = results.get(query)
        if ranking is None:
            metrics = QueryMetrics(query, 0.0, 0.0, 0.0, flag=FLAG_MISSING_RESULTS)
        else:
            metrics = QueryMetrics(
                query,
                reciprocal_rank(ranking, relevant, k),
                average_precision(ranking, relevant, k),
                recall_at_k(ranking, relevant, k),
            )
        per_query.append(metrics)
        included.append(metrics)
    n = len(included)
    mrr = sum(m.reciprocal_rank for m in included) / n if n else 0.0
    map_score = sum(m.average_precision for m in included) / n if n else 0.0
    recall = sum(m.recall_at_k for m in included) / n if n else 0.0
    return EvalReport(
        k=k,
        per_query=per_query,
        mrr=mrr,
        map=map_score,
        recall=recall,
        evaluated_queries=n,
        skipped_queries=len(per_query) - n,
    )


def render_report(report: EvalReport) -> str:
    """Aligned plain-text table of per-query metrics and the aggregates."""
    header = ("query", "RR", "AP", f"recall@{report.k}", "flag")
    rows = [
        (
            str(m.query),
            f"{m.reciprocal_rank:.4f}",
            f"{m.average_precision:.4f}",
            f"{m.recall_at_k:.4f}",
            m.flag or "",
        )
        for m in report.per_query
    ]
    rows.append(("mean", f"{report.mrr:.4f}", f"{report.map:.4f}", f"{report.recall:.4f}", ""))
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    return "\n".join(lines)
