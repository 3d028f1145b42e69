"""TOPSIS: rank alternatives by closeness to the ideal solution.

The classical Hwang-Yoon procedure with vector normalization:

1. normalize each criterion column by its Euclidean norm (a zero-norm
   column contributes zeros),
2. multiply by the criterion weights (which must sum to 1),
3. take the per-criterion best values as the ideal point (max for
   benefit criteria, min for cost) and the worst as the anti-ideal,
4. compute Euclidean distances d+ and d- of every row to both points,
5. closeness = d- / (d+ + d-), defined as 0.5 when both distances are 0,
6. sort by closeness descending, ties broken by row label ascending.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError

WEIGHT_SUM_TOLERANCE = 1e-9


class Direction(str, Enum):
    BENEFIT = "benefit"
    COST = "cost"


@dataclass
class DecisionMatrix:
    """Candidates x criteria raw scores plus per-criterion direction/weight.

    ``criteria`` entries need ``id``, ``direction`` and ``weight``
    attributes; weights must already be normalized to sum to 1.
    """

    refs: list
    scores: np.ndarray
    criteria: list

    def validate(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValidationError(f"decision matrix must be 2-D, got shape {scores.shape}")
        n_rows, n_cols = scores.shape
        if n_rows < 1:
            raise ValidationError("decision matrix needs at least one row")
        if n_rows != len(self.refs):
            raise ValidationError(
                f"matrix has {n_rows} rows but {len(self.refs)} row labels"
            )
        if n_cols != len(self.criteria):
            raise ValidationError(
                f"matrix has {n_cols} columns but {len(self.criteria)} criteria"
            )
        bad = np.argwhere(np.isnan(scores))
        if bad.size:
            i, j = bad[0]
            raise ValidationError(
                f"NaN score for candidate {self.refs[i]} on criterion {self.criteria[j].id}"
            )
        total = sum(c.weight for c in self.criteria)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValidationError(f"criterion weights must sum to 1, got {total!r}")


@dataclass
class TopsisResult:
    """Ranking rows are (ref, closeness, distance_to_ideal, distance_to_anti_ideal)."""

    ranking: list[tuple]
    ideal: np.ndarray
    anti_ideal: np.ndarray

    def ordered_refs(self) -> list:
        return [row[0] for row in self.ranking]

    def closeness_of(self, ref) -> float:
        for row_ref, closeness, _, _ in self.ranking:
            if row_ref == ref:
                return closeness
        raise KeyError(ref)


def topsis_rank(matrix: DecisionMatrix) -> TopsisResult:
    """Run the six TOPSIS steps on a validated decision matrix."""
    matrix.validate()
    X = np.asarray(matrix.scores, dtype=np.float64)
    weights = np.array([c.weight for c in matrix.criteria], dtype=np.float64)
    benefit = np.array([c.direction == Direction.BENEFIT for c in matrix.criteria])

    norms = np.sqrt((X**2).sum(axis=0))
    R = np.divide(X, norms, out=np.zeros_like(X), where=norms > 0.0)
    V = R * weights

    ideal = np.where(benefit, V.max(axis=0), V.min(axis=0))
    anti_ideal = np.where(benefit, V.min(axis=0), V.max(axis=0))

    d_plus = np.sqrt(((V - ideal) ** 2).sum(axis=1))
    d_minus = np.sqrt(((V - anti_ideal) ** 2).sum(axis=1))
    denom = d_plus + d_minus
    closeness = np.divide(d_minus, denom, out=np.full_like(denom, 0.5), where=denom > 0.0)

    order = sorted(range(len(matrix.refs)), key=lambda i: (-closeness[i], matrix.refs[i]))
    ranking = [
        (matrix.refs[i], float(closeness[i]), float(d_plus[i]), float(d_minus[i])) for i in order
    ]
    return TopsisResult(ranking=ranking, ideal=ideal, anti_ideal=anti_ideal)
