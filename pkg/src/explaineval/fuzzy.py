"""Fuzzy synthetic evaluation of explanation quality.

Aggregates per-metric score distributions into one appraisal vector over
linguistic grades:  a membership matrix holds, for every evaluation factor,
the proportion of responses at each grade; a weight vector expresses the
relative importance of the factors; composing the two yields the overall
appraisal, which is then classified at its largest membership.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .domain import AppraisalGrade, ExplanationStyle, MetricId

_TOL = 1e-9
#: Published appraisal vectors are rounded to 4 decimals; their sums may
#: drift from 1 by up to this much and still be accepted.
ROUNDING_TOL = 2e-3


@dataclass(frozen=True)
class FactorSet:
    """Ordered evaluation factors (rows of the mapping matrix)."""

    factors: tuple[MetricId, ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise ValueError("factor set must be non-empty")
        if len(set(self.factors)) != len(self.factors):
            raise ValueError("factor set must not contain duplicates")

    def __len__(self) -> int:
        return len(self.factors)


DEFAULT_FACTORS = FactorSet(tuple(MetricId))


@dataclass(frozen=True)
class GradeSet:
    """Ordered appraisal grades (columns of the mapping matrix)."""

    grades: tuple[AppraisalGrade, ...]

    def __post_init__(self) -> None:
        if not self.grades:
            raise ValueError("grade set must be non-empty")
        if list(self.grades) != sorted(self.grades):
            raise ValueError("grades must be in ascending ordinal order")
        if len(set(self.grades)) != len(self.grades):
            raise ValueError("grade set must not contain duplicates")

    def __len__(self) -> int:
        return len(self.grades)

    def index_of_score(self, score: int) -> int:
        for i, grade in enumerate(self.grades):
            if int(grade) == score:
                return i
        raise ValueError(f"score {score} has no grade in this grade set")


DEFAULT_GRADES = GradeSet(tuple(AppraisalGrade))


@dataclass(frozen=True)
class FuzzyMappingMatrix:
    """Row-stochastic membership degrees, factors x grades."""

    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("mapping matrix must have at least one row")
        width = len(self.entries[0])
        for i, row in enumerate(self.entries):
            if len(row) != width:
                raise ValueError("mapping matrix rows must have equal length")
            if any(v < 0 for v in row):
                raise ValueError(f"row {i}: membership degrees must be >= 0")
            if abs(sum(row) - 1.0) > _TOL:
                raise ValueError(f"row {i}: memberships must sum to 1, got {sum(row)}")

    @property
    def n_factors(self) -> int:
        return len(self.entries)

    @property
    def n_grades(self) -> int:
        return len(self.entries[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def row(self, i: int) -> tuple[float, ...]:
        return self.entries[i]


@dataclass(frozen=True)
class WeightVector:
    """Non-negative factor weights summing to 1."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("weight vector must be non-empty")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be >= 0")
        if abs(sum(self.weights) - 1.0) > _TOL:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)}")

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def equal(cls, n: int) -> "WeightVector":
        return cls((1.0 / n,) * n)

    @classmethod
    def one_hot(cls, n: int, index: int) -> "WeightVector":
        return cls(tuple(1.0 if i == index else 0.0 for i in range(n)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class AppraisalVector:
    """Overall evaluation: one membership per appraisal grade."""

    e: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.e:
            raise ValueError("appraisal vector must be non-empty")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.e, dtype=float)


# A composition operator turns (weights, matrix) into the appraisal entries.
CompositionOperator = Callable[[np.ndarray, np.ndarray], np.ndarray]


def sum_operator(weights: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Weighted sum over factors: e_j = sum_i w_i * r_ij."""
    return weights @ matrix


#: Pluggable operators; only the weighted sum is built in.
OPERATORS: dict[str, CompositionOperator] = {"sum": sum_operator}


def build_mapping_matrix(
    responses: Mapping[MetricId, Sequence[int]],
    grades: GradeSet = DEFAULT_GRADES,
    factors: FactorSet | None = None,
) -> FuzzyMappingMatrix:
    """Empirical membership matrix from raw 1-5 scores.

    Entry (i, k) is the proportion of factor i's responses whose score
    corresponds to grade k.  Ten responses of which seven are 3, two are 4
    and one is 5 therefore yield the row (0, 0, 0.7, 0.2, 0.1).
    """
    if factors is None:
        factors = FactorSet(tuple(responses.keys()))
    rows = []
    for metric in factors.factors:
        scores = responses.get(metric)
        if not scores:
            raise ValueError(f"factor {metric.value} has no responses")
        counts = [0] * len(grades)
        for score in scores:
            if not 1 <= int(score) <= 5:
                raise ValueError(
                    f"factor {metric.value}: score {score!r} outside [1, 5]"
                )
            counts[grades.index_of_score(int(score))] += 1
        total = len(scores)
        rows.append(tuple(c / total for c in counts))
    return FuzzyMappingMatrix(tuple(rows))


def compose(
    weights: WeightVector,
    matrix: FuzzyMappingMatrix,
    operator: str | CompositionOperator = "sum",
) -> AppraisalVector:
    """Apply the composition operator; dimensions must agree."""
    if len(weights) != matrix.n_factors:
        raise ValueError(
            f"weight/matrix dimension mismatch: {len(weights)} weights, "
            f"{matrix.n_factors} matrix rows"
        )
    op = OPERATORS[operator] if isinstance(operator, str) else operator
    return AppraisalVector(tuple(float(v) for v in op(weights.as_array(), matrix.as_array())))


@dataclass(frozen=True)
class Classification:
    grade: AppraisalGrade
    membership: float
    tied: bool


def classify(
    vector: AppraisalVector, grades: GradeSet = DEFAULT_GRADES
) -> Classification:
    """Grade at the largest membership; ties resolve toward the higher grade."""
    if len(vector.e) != len(grades):
        raise ValueError("appraisal vector length must match the grade set")
    best = max(range(len(vector.e)), key=lambda j: (vector.e[j], j))
    tied = sum(1 for v in vector.e if v == vector.e[best]) > 1
    return Classification(grades.grades[best], vector.e[best], tied)


def implied_mean(
    vector: AppraisalVector,
    grades: GradeSet = DEFAULT_GRADES,
    tol: float = ROUNDING_TOL,
) -> float:
    """Expected grade ordinal under the appraisal distribution.

    Bridges the appraisal vector back to the 1-5 questionnaire scale; the
    vector must be normalized (within ``tol``, which defaults to the
    tolerance of 4-decimal published rounding).
    """
    total = sum(vector.e)
    if abs(total - 1.0) > tol:
        raise ValueError(f"appraisal vector is not normalized: sum={total}")
    return float(sum(int(g) * v for g, v in zip(grades.grades, vector.e)))


@dataclass(frozen=True)
class StyleEvaluation:
    style: ExplanationStyle
    matrix: FuzzyMappingMatrix
    vector: AppraisalVector
    classification: Classification


def evaluate_style(
    sessions: Iterable[object],
    style: ExplanationStyle,
    weights: WeightVector | None = None,
    grades: GradeSet = DEFAULT_GRADES,
    factors: FactorSet = DEFAULT_FACTORS,
    operator: str | CompositionOperator = "sum",
) -> StyleEvaluation:
    """Full pipeline for one style over completed sessions' questionnaires.

    ``sessions`` is anything exposing a ``likert`` iterable of responses with
    ``style``, ``metric`` and ``score`` attributes.
    """
    if weights is None:
        weights = WeightVector.equal(len(factors))
    responses: dict[MetricId, list[int]] = {m: [] for m in factors.factors}
    for session in sessions:
        for resp in session.likert:
            if resp.style == style and resp.metric in responses:
                responses[resp.metric].append(resp.score)
    matrix = build_mapping_matrix(responses, grades=grades, factors=factors)
    vector = compose(weights, matrix, operator=operator)
    return StyleEvaluation(style, matrix, vector, classify(vector, grades))


def load_weights(path: str | Path, factors: FactorSet = DEFAULT_FACTORS) -> WeightVector:
    """Read a JSON document mapping metric names to weights; must sum to 1."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("weights document must be a JSON object")
    by_metric = {MetricId.from_label(name): float(w) for name, w in raw.items()}
    missing = [m.value for m in factors.factors if m not in by_metric]
    if missing:
        raise ValueError(f"weights document missing factors: {', '.join(missing)}")
    return WeightVector(tuple(by_metric[m] for m in factors.factors))
