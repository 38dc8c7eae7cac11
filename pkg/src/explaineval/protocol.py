"""The four-step within-subject study session.

A session walks forward through four phases: rating 12 seed movies under
given contextual situations, six recommendation trials (rate from the
explanation alone, then rate again with full details), the 36-cell
questionnaire, and completion.  All operations are pure: they take a
session value and return the updated one, so replaying a session's events
reproduces it exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

from .domain import (
    DEFAULT_VOCABULARIES,
    STUDY_FACTORS,
    ContextualRating,
    ContextualSituation,
    ExplanationStyle,
    MetricId,
)
from .explanations import Explanation, feasible_styles, render_explanation
from .ingest import Dataset
from .recommender import (
    NoCandidatesError,
    RecommenderArtifacts,
    recommend,
    select_local_dataset,
)

SEED_TASK_COUNT = 12
TRIAL_COUNT = len(ExplanationStyle)
LIKERT_COUNT = len(ExplanationStyle) * len(MetricId)

#: Upper bound on a client-reported decision time (10 minutes).
MAX_DECISION_MS = 600_000


class ProtocolError(Exception):
    """A write that the session's current state does not allow."""


class Phase(str, Enum):
    SEED_RATING = "SeedRating"
    TRIALS = "Trials"
    QUESTIONNAIRE = "Questionnaire"
    COMPLETE = "Complete"


@dataclass(frozen=True)
class Participant:
    age_band: str
    gender: str
    education: str
    occupation: str
    movie_frequency: str

    def as_dict(self) -> dict[str, str]:
        return {
            "age_band": self.age_band,
            "gender": self.gender,
            "education": self.education,
            "occupation": self.occupation,
            "movie_frequency": self.movie_frequency,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, str]) -> "Participant":
        return cls(**{k: str(raw[k]) for k in (
            "age_band", "gender", "education", "occupation", "movie_frequency")})


@dataclass(frozen=True)
class SeedTask:
    movie_id: str
    situation: ContextualSituation
    score: int | None = None


@dataclass(frozen=True)
class TrialRecord:
    """One recommendation trial: explanation-only rating r with its decision
    time, then the detail rating r'."""

    style: ExplanationStyle
    movie_id: str
    explanation: Explanation
    r: int | None = None
    t_ms: int | None = None
    r_prime: int | None = None

    @property
    def complete(self) -> bool:
        return self.r is not None and self.r_prime is not None


@dataclass(frozen=True)
class LikertResponse:
    style: ExplanationStyle
    metric: MetricId
    score: int

    def __post_init__(self) -> None:
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"Likert score must be in [1, 5], got {self.score!r}")


@dataclass(frozen=True)
class Session:
    session_id: str
    participant: Participant
    rng_seed: int
    phase: Phase
    seed_tasks: tuple[SeedTask, ...]
    target_situation: ContextualSituation | None = None
    trials: tuple[TrialRecord, ...] = ()
    likert: tuple[LikertResponse, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def seeds_answered(self) -> int:
        return sum(1 for t in self.seed_tasks if t.score is not None)

    @property
    def complete(self) -> bool:
        return self.phase == Phase.COMPLETE

    def trial_for(self, style: ExplanationStyle) -> TrialRecord | None:
        for t in self.trials:
            if t.style == style:
                return t
        return None


def _validate_score(score: int, what: str = "score") -> None:
    if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
        raise ValueError(f"{what} must be an integer in [1, 5], got {score!r}")


def observed_study_situations(ds: Dataset) -> list[ContextualSituation]:
    """Distinct situations in the dataset with all four study factors set."""
    seen = {
        r.situation.restrict(STUDY_FACTORS)
        for r in ds.ratings
        if r.situation.assigns_all(STUDY_FACTORS)
    }
    return sorted(seen)


def _study_vocabularies(ds: Dataset) -> dict[str, tuple[str, ...]]:
    present = {f.factor_id: f.vocabulary for f in ds.factors}
    return {
        fid: present.get(fid, DEFAULT_VOCABULARIES[fid]) for fid in STUDY_FACTORS
    }


def random_study_situation(rng: random.Random, ds: Dataset) -> ContextualSituation:
    """Uniform draw over the cross-product of the study-factor vocabularies."""
    vocab = _study_vocabularies(ds)
    return ContextualSituation.of(
        {fid: rng.choice(list(vocab[fid])) for fid in STUDY_FACTORS}
    )


def start_session(
    ds: Dataset,
    participant: Participant,
    rng_seed: int,
    session_id: str = "",
) -> Session:
    """Open a session: sample the 12 seed movies and their situations."""
    catalog = sorted(ds.movies)
    if len(catalog) < SEED_TASK_COUNT:
        raise ValueError(
            f"catalog has {len(catalog)} movies; {SEED_TASK_COUNT} are required"
        )
    rng = random.Random(f"{rng_seed}:seeds")
    movie_ids = rng.sample(catalog, SEED_TASK_COUNT)
    observed = observed_study_situations(ds)
    tasks = []
    for movie_id in movie_ids:
        situation = (
            rng.choice(observed) if observed else random_study_situation(rng, ds)
        )
        tasks.append(SeedTask(movie_id=movie_id, situation=situation))
    return Session(
        session_id=session_id,
        participant=participant,
        rng_seed=rng_seed,
        phase=Phase.SEED_RATING,
        seed_tasks=tuple(tasks),
    )


def submit_seed_rating(session: Session, task_index: int, score: int) -> Session:
    if session.phase != Phase.SEED_RATING:
        raise ProtocolError(f"cannot submit seed ratings in phase {session.phase.value}")
    if not 0 <= task_index < len(session.seed_tasks):
        raise ValueError(f"seed task index out of range: {task_index}")
    if session.seed_tasks[task_index].score is not None:
        raise ProtocolError(f"seed task {task_index} already answered")
    _validate_score(score)
    tasks = list(session.seed_tasks)
    tasks[task_index] = replace(tasks[task_index], score=score)
    updated = replace(session, seed_tasks=tuple(tasks))
    if updated.seeds_answered == SEED_TASK_COUNT:
        updated = replace(updated, phase=Phase.TRIALS)
    return updated


def participant_user_id(session_id: str) -> str:
    return f"participant:{session_id}"


def seed_ratings_of(session: Session) -> list[ContextualRating]:
    user = participant_user_id(session.session_id)
    return [
        ContextualRating(
            user_id=user,
            movie_id=task.movie_id,
            score=task.score,
            situation=task.situation,
        )
        for task in session.seed_tasks
        if task.score is not None
    ]


def _match_styles(
    movies: Sequence[str],
    preferred: Sequence[ExplanationStyle],
    feasible: Mapping[str, set[ExplanationStyle]],
) -> dict[str, ExplanationStyle] | None:
    """A style-to-movie bijection keeping the preferred pairing where possible."""
    order = list(preferred)
    assignment: dict[str, ExplanationStyle] = {}
    taken: dict[ExplanationStyle, str] = {}

    def assign(style: ExplanationStyle, tried: set[str]) -> bool:
        for movie in movies:
            if movie in tried or style not in feasible[movie]:
                continue
            tried.add(movie)
            if movie not in assignment or assign(assignment[movie], tried):
                assignment[movie] = style
                taken[style] = movie
                return True
        return False

    # Seed with the preferred pairing first so repairs stay minimal.
    for movie, style in zip(movies, order):
        if style in feasible[movie] and movie not in assignment:
            assignment[movie] = style
            taken[style] = movie
    for style in order:
        if style not in taken and not assign(style, set()):
            return None
    return assignment


def begin_trials(
    session: Session, ds: Dataset, artifacts: RecommenderArtifacts
) -> Session:
    """Draw the target situation, recommend, and lay out the six trials.

    Seed ratings are appended to a session-local copy of the dataset; the
    recommendation excludes the seed movies.  Each recommended movie gets
    one explanation style via a seeded permutation, repaired minimally when
    a style's preconditions fail for its movie.
    """
    if session.phase != Phase.TRIALS or session.trials:
        raise ProtocolError("trials can only begin once, after all seed ratings")
    if session.seeds_answered != SEED_TASK_COUNT:
        raise ProtocolError("all seed ratings must be present before trials")
    rng = random.Random(f"{session.rng_seed}:trials")
    target = random_study_situation(rng, ds)
    overlay = ds.extended(seed_ratings_of(session))
    user = participant_user_id(session.session_id)
    seed_movies = {t.movie_id for t in session.seed_tasks}
    notes: list[str] = []

    selection = select_local_dataset(
        overlay, target, artifacts.profiles, artifacts.config
    )
    notes.append(
        f"local dataset: {selection.dataset.n_ratings} ratings at threshold "
        f"{selection.effective_threshold:g}"
        + (" (relaxed)" if selection.relaxed else "")
        + (" (full dataset)" if selection.used_full_dataset else "")
    )
    try:
        recs = recommend(selection.dataset, user, seed_movies, artifacts.config)
    except NoCandidatesError as exc:
        notes.append(f"recommender returned no candidates: {exc}")
        recs = []
    movie_ids = [r.movie_id for r in recs]
    if len(movie_ids) < TRIAL_COUNT:
        padding = _popularity_padding(
            overlay, exclude=seed_movies | set(movie_ids),
            needed=TRIAL_COUNT - len(movie_ids),
        )
        notes.append(f"padded {len(padding)} trials from popularity fallback")
        movie_ids.extend(padding)
    if len(movie_ids) < TRIAL_COUNT:
        raise ProtocolError(
            f"catalog cannot supply {TRIAL_COUNT} trial movies outside the seed set"
        )
    movie_ids = movie_ids[:TRIAL_COUNT]

    history = [ds.movies[t.movie_id] for t in session.seed_tasks]
    permutation = rng.sample(list(ExplanationStyle), TRIAL_COUNT)
    feasible = {
        m: feasible_styles(overlay, m, history, target) for m in movie_ids
    }
    assignment = _match_styles(movie_ids, permutation, feasible)
    if assignment is None:
        raise ProtocolError("no feasible style assignment for the trial movies")
    if any(assignment[m] != s for m, s in zip(movie_ids, permutation)):
        notes.append("style permutation repaired for feasibility")

    trials = []
    for movie_id in movie_ids:
        style = assignment[movie_id]
        explanation = render_explanation(
            style, overlay, movie_id, user, history, target,
            neighbourhood_k=artifacts.config.neighborhood_k,
        )
        if explanation.evidence.get("fallback"):
            notes.append(f"{style.value} used fallback wording for {movie_id}")
        trials.append(TrialRecord(style=style, movie_id=movie_id, explanation=explanation))

    return replace(
        session,
        target_situation=target,
        trials=tuple(trials),
        notes=session.notes + tuple(notes),
    )


def _popularity_padding(ds: Dataset, exclude: set[str], needed: int) -> list[str]:
    counts: dict[str, int] = {}
    for r in ds.ratings:
        counts[r.movie_id] = counts.get(r.movie_id, 0) + 1
    ranked = sorted(
        (m for m in ds.movies if m not in exclude),
        key=lambda m: (-counts.get(m, 0), m),
    )
    return ranked[:needed]


def record_explanation_rating(
    session: Session, trial_index: int, r: int, t_ms: int
) -> Session:
    if session.phase != Phase.TRIALS:
        raise ProtocolError(f"cannot rate trials in phase {session.phase.value}")
    if not 0 <= trial_index < len(session.trials):
        raise ValueError(f"trial index out of range: {trial_index}")
    trial = session.trials[trial_index]
    if trial.r is not None:
        raise ProtocolError(f"trial {trial_index} already has an explanation rating")
    _validate_score(r, "r")
    if not isinstance(t_ms, int) or isinstance(t_ms, bool) or t_ms < 0:
        raise ValueError(f"t_ms must be a non-negative integer, got {t_ms!r}")
    trials = list(session.trials)
    trials[trial_index] = replace(trial, r=r, t_ms=min(t_ms, MAX_DECISION_MS))
    return replace(session, trials=tuple(trials))


def record_detail_rating(session: Session, trial_index: int, r_prime: int) -> Session:
    if session.phase != Phase.TRIALS:
        raise ProtocolError(f"cannot rate trials in phase {session.phase.value}")
    if not 0 <= trial_index < len(session.trials):
        raise ValueError(f"trial index out of range: {trial_index}")
    trial = session.trials[trial_index]
    if trial.r is None:
        raise ProtocolError(
            f"trial {trial_index}: detail rating requires the explanation rating first"
        )
    if trial.r_prime is not None:
        raise ProtocolError(f"trial {trial_index} already has a detail rating")
    _validate_score(r_prime, "r_prime")
    trials = list(session.trials)
    trials[trial_index] = replace(trial, r_prime=r_prime)
    updated = replace(session, trials=tuple(trials))
    if all(t.complete for t in updated.trials):
        updated = replace(updated, phase=Phase.QUESTIONNAIRE)
    return updated


def submit_likert(
    session: Session, style: ExplanationStyle, metric: MetricId, score: int
) -> Session:
    if session.phase != Phase.QUESTIONNAIRE:
        raise ProtocolError(
            f"cannot answer the questionnaire in phase {session.phase.value}"
        )
    if any(l.style == style and l.metric == metric for l in session.likert):
        raise ProtocolError(
            f"({style.value}, {metric.value}) already answered"
        )
    _validate_score(score)
    updated = replace(
        session, likert=session.likert + (LikertResponse(style, metric, score),)
    )
    if len(updated.likert) == LIKERT_COUNT:
        updated = replace(updated, phase=Phase.COMPLETE)
    return updated


def likert_cells() -> list[tuple[ExplanationStyle, MetricId]]:
    """Questionnaire order: metric by metric, each over all six styles."""
    return [(s, m) for m in MetricId for s in ExplanationStyle]


def next_likert_cell(session: Session) -> tuple[ExplanationStyle, MetricId] | None:
    answered = {(l.style, l.metric) for l in session.likert}
    for cell in likert_cells():
        if cell not in answered:
            return cell
    return None
