"""Shared vocabulary for the whole system.

Users, movies, ratings-in-context, explanation styles, evaluation metrics
and appraisal grades.  Everything here is an immutable value type, safe to
share across threads and to use as dict keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable, Mapping


class ExplanationStyle(Enum):
    """The six explanation styles shown to participants."""

    AVG = "Avg"
    PER = "Per"
    SIMU = "Simu"
    SIMI = "Simi"
    CONTENT = "Content"
    CONTEXT_AWARE = "Context-aware"

    @classmethod
    def from_label(cls, label: str) -> "ExplanationStyle":
        for style in cls:
            if style.value == label:
                return style
        raise ValueError(f"unknown explanation style: {label!r}")


class MetricId(Enum):
    """The six goals explanations are evaluated against."""

    EFFICIENCY = "Efficiency"
    EFFECTIVENESS = "Effectiveness"
    PERSUASIVENESS = "Persuasiveness"
    SATISFACTION = "Satisfaction"
    TRUST = "Trust"
    TRANSPARENCY = "Transparency"

    @classmethod
    def from_label(cls, label: str) -> "MetricId":
        for metric in cls:
            if metric.value == label:
                return metric
        raise ValueError(f"unknown metric: {label!r}")


#: Short goal statements, used by questionnaire screens as anchors.
METRIC_DESCRIPTIONS: dict[MetricId, str] = {
    MetricId.EFFICIENCY: "Help users make decisions more quickly",
    MetricId.EFFECTIVENESS: "Helps users make better decisions",
    MetricId.PERSUASIVENESS: "Change users' behaviours",
    MetricId.SATISFACTION: "Increase the ease of use or enjoyment",
    MetricId.TRUST: "Increase user's confidence in the system",
    MetricId.TRANSPARENCY: "Help users understand how the system works",
}


class AppraisalGrade(IntEnum):
    """Linguistic appraisal levels, ordinal and aligned with scores 1-5."""

    VERY_POOR = 1
    POOR = 2
    MEDIUM = 3
    GOOD = 4
    VERY_GOOD = 5

    @property
    def label(self) -> str:
        return _GRADE_LABELS[self]


_GRADE_LABELS = {
    AppraisalGrade.VERY_POOR: "Very poor",
    AppraisalGrade.POOR: "Poor",
    AppraisalGrade.MEDIUM: "Medium",
    AppraisalGrade.GOOD: "Good",
    AppraisalGrade.VERY_GOOD: "Very good",
}


def grade_of_score(score: int) -> AppraisalGrade:
    """Map a 1-5 questionnaire score to the grade with the same ordinal.

    The crisp link is ordinal; distributional fuzziness is carried by the
    membership matrices in :mod:`explaineval.fuzzy`, not here.
    """
    if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
        raise ValueError(f"score must be an integer in [1, 5], got {score!r}")
    return AppraisalGrade(score)


# The four contextual factors retained for the study.
PHYSICAL_WELLNESS = "PhysicalWellness"
MOOD = "Mood"
LOCATION = "Location"
WEATHER = "Weather"

STUDY_FACTORS: tuple[str, ...] = (PHYSICAL_WELLNESS, MOOD, LOCATION, WEATHER)

#: Default condition vocabularies.  A schema file, when provided, wins.
DEFAULT_VOCABULARIES: dict[str, tuple[str, ...]] = {
    PHYSICAL_WELLNESS: ("healthy", "ill"),
    MOOD: ("positive", "neutral", "negative"),
    LOCATION: ("home", "public", "friends_house"),
    WEATHER: ("sunny", "rainy", "stormy", "snowy", "cloudy"),
}


@dataclass(frozen=True)
class ContextualFactor:
    """A contextual variable together with its ordered condition vocabulary."""

    factor_id: str
    vocabulary: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.factor_id:
            raise ValueError("factor_id must be non-empty")
        if not self.vocabulary:
            raise ValueError(f"factor {self.factor_id}: vocabulary must be non-empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError(f"factor {self.factor_id}: duplicate conditions")


def default_study_factors() -> tuple[ContextualFactor, ...]:
    return tuple(
        ContextualFactor(fid, DEFAULT_VOCABULARIES[fid]) for fid in STUDY_FACTORS
    )


@dataclass(frozen=True, order=True)
class ContextualSituation:
    """An assignment of one condition to each of a set of factors.

    Stored as a sorted tuple of ``(factor_id, condition)`` pairs so equality
    is structural and instances are hashable.
    """

    pairs: tuple[tuple[str, str], ...]

    @classmethod
    def of(cls, assignments: Mapping[str, str]) -> "ContextualSituation":
        return cls(tuple(sorted(assignments.items())))

    def __post_init__(self) -> None:
        factors = [f for f, _ in self.pairs]
        if len(set(factors)) != len(factors):
            raise ValueError("a factor may be assigned at most one condition")
        if list(self.pairs) != sorted(self.pairs):
            object.__setattr__(self, "pairs", tuple(sorted(self.pairs)))

    def get(self, factor_id: str) -> str | None:
        for fid, condition in self.pairs:
            if fid == factor_id:
                return condition
        return None

    @property
    def factor_ids(self) -> tuple[str, ...]:
        return tuple(fid for fid, _ in self.pairs)

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)

    def restrict(self, factor_ids: Iterable[str]) -> "ContextualSituation":
        """Keep only the assignments for the given factors."""
        wanted = set(factor_ids)
        return ContextualSituation(tuple(p for p in self.pairs if p[0] in wanted))

    def assigns_all(self, factor_ids: Iterable[str]) -> bool:
        assigned = set(self.factor_ids)
        return all(fid in assigned for fid in factor_ids)

    def validate_against(self, factors: Iterable[ContextualFactor]) -> None:
        """Raise if any assigned condition is outside its factor's vocabulary."""
        vocab = {f.factor_id: set(f.vocabulary) for f in factors}
        for fid, condition in self.pairs:
            if fid in vocab and condition not in vocab[fid]:
                raise ValueError(
                    f"condition {condition!r} not in vocabulary of factor {fid}"
                )


EMPTY_SITUATION = ContextualSituation(())


@dataclass(frozen=True)
class Movie:
    """Catalog entry; the content attributes feed the Content explanation."""

    movie_id: str
    title: str
    director: str = ""
    actors: tuple[str, ...] = ()
    genres: tuple[str, ...] = ()
    year: int = 0

    def __post_init__(self) -> None:
        if not self.movie_id:
            raise ValueError("movie_id must be non-empty")
        if not self.title:
            raise ValueError(f"movie {self.movie_id}: title must be non-empty")


@dataclass(frozen=True)
class ContextualRating:
    """One user's 1-5 score for one movie under a contextual situation.

    Situations loaded from a dataset may carry factors beyond the four study
    factors; they are kept as-is and restricted where the study needs it.
    """

    user_id: str
    movie_id: str
    score: int
    situation: ContextualSituation
    timestamp: int = 0

    def __post_init__(self) -> None:
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating score must be in {{1..5}}, got {self.score!r}")
