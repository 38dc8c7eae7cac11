"""Synthetic data: a desk-scale dataset generator and a cohort simulator.

The simulator drives real sessions through the real store, so a simulated
log is indistinguishable in shape from one produced by live participants.
Score behaviour comes from a declarative profile document, which makes
end-to-end expectations data rather than code.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .domain import (
    DEFAULT_VOCABULARIES,
    STUDY_FACTORS,
    ContextualRating,
    ContextualSituation,
    ExplanationStyle,
    MetricId,
    Movie,
    default_study_factors,
)
from .ingest import Dataset
from .protocol import Participant, likert_cells
from .recommender import (
    RecommenderArtifacts,
    RecommenderConfig,
    build_artifacts,
    scaled_config,
)
from .store import LogicalClock, SessionStore

_GENRES = ("action", "comedy", "drama", "romance", "thriller", "sci-fi",
           "documentary", "animation")
_AGE_BANDS = ("18-25", "26-35", "36-45", "46-55", "56+")
_GENDERS = ("female", "male", "non-binary", "prefer not to say")
_EDUCATION = ("secondary", "bachelor", "master", "doctorate")
_OCCUPATIONS = ("student", "researcher", "engineer", "teacher", "other")
_FREQUENCIES = ("rarely", "monthly", "weekly", "several times a week")


def synthetic_dataset(
    seed: int = 42,
    n_users: int = 30,
    n_movies: int = 50,
    n_ratings: int = 1200,
) -> Dataset:
    """A structured random dataset with two planted taste blocks.

    Movies split into two latent groups; users prefer one group, and two
    contextual conditions nudge scores, so clustering, condition profiles
    and local selection all have signal to find.
    """
    rng = random.Random(f"{seed}:dataset")
    movies: dict[str, Movie] = {}
    group: dict[str, int] = {}
    for i in range(n_movies):
        movie_id = f"m{i:03d}"
        group[movie_id] = i % 2
        movies[movie_id] = Movie(
            movie_id=movie_id,
            title=f"Synthetic Feature {i:03d}",
            director=f"Director {i % 7}",
            actors=(f"Actor {i % 11}", f"Actor {(i + 3) % 11}"),
            genres=tuple(sorted({_GENRES[i % 8], _GENRES[(i * 3 + 1) % 8]})),
            year=1980 + (i % 45),
        )
    users = [f"u{i:03d}" for i in range(n_users)]
    taste = {u: i % 2 for i, u in enumerate(users)}
    vocab = DEFAULT_VOCABULARIES
    ratings = []
    for _ in range(n_ratings):
        user = rng.choice(users)
        movie_id = rng.choice(sorted(movies))
        situation = ContextualSituation.of(
            {fid: rng.choice(list(vocab[fid])) for fid in STUDY_FACTORS}
        )
        base = 4.2 if taste[user] == group[movie_id] else 1.8
        if situation.get("Weather") == "sunny" and group[movie_id] == 0:
            base += 0.6
        if situation.get("Mood") == "negative" and group[movie_id] == 1:
            base -= 0.6
        score = round(base + rng.gauss(0.0, 0.7))
        ratings.append(
            ContextualRating(
                user_id=user,
                movie_id=movie_id,
                score=max(1, min(5, score)),
                situation=situation,
            )
        )
    return Dataset(
        ratings=tuple(ratings),
        movies=movies,
        users=frozenset(r.user_id for r in ratings),
        factors=default_study_factors(),
    )


class ProfileError(Exception):
    pass


@dataclass(frozen=True)
class SimulationProfile:
    """Score distributions for a simulated cohort.

    ``likert`` maps style label -> metric label -> {score: probability};
    ``trials`` maps style label -> {"diff": {...}, "t_ms": {...}};
    ``seed_scores`` is a {score: probability} map.  ``*`` wildcards apply
    at any level.
    """

    likert: dict
    trials: dict
    seed_scores: dict

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SimulationProfile":
        likert = raw.get("likert")
        trials = raw.get("trials")
        if not isinstance(likert, dict) or not isinstance(trials, dict):
            raise ProfileError("profile must define 'likert' and 'trials' objects")
        profile = cls(
            likert=dict(likert),
            trials=dict(trials),
            seed_scores=dict(raw.get("seed_scores", {"1": 0.2, "2": 0.2, "3": 0.2,
                                                     "4": 0.2, "5": 0.2})),
        )
        _check_dist(profile.seed_scores, "seed_scores", 1, 5)
        for style in ExplanationStyle:
            for metric in MetricId:
                _check_dist(profile.likert_dist(style, metric),
                            f"likert[{style.value}][{metric.value}]", 1, 5)
            _check_dist(profile.diff_dist(style),
                        f"trials[{style.value}][diff]", -4, 4)
            _check_dist(profile.t_ms_dist(style),
                        f"trials[{style.value}][t_ms]", 0, 10_000_000)
        return profile

    def likert_dist(self, style: ExplanationStyle, metric: MetricId) -> dict:
        by_metric = self.likert.get(style.value, self.likert.get("*"))
        if not isinstance(by_metric, dict):
            raise ProfileError(f"no likert distributions for style {style.value}")
        dist = by_metric.get(metric.value, by_metric.get("*"))
        if not isinstance(dist, dict):
            raise ProfileError(
                f"no likert distribution for ({style.value}, {metric.value})"
            )
        return dist

    def _trial_entry(self, style: ExplanationStyle) -> dict:
        entry = self.trials.get(style.value, self.trials.get("*"))
        if not isinstance(entry, dict):
            raise ProfileError(f"no trial distributions for style {style.value}")
        return entry

    def diff_dist(self, style: ExplanationStyle) -> dict:
        dist = self._trial_entry(style).get("diff")
        if not isinstance(dist, dict):
            raise ProfileError(f"trials[{style.value}] must define 'diff'")
        return dist

    def t_ms_dist(self, style: ExplanationStyle) -> dict:
        dist = self._trial_entry(style).get("t_ms")
        if not isinstance(dist, dict):
            raise ProfileError(f"trials[{style.value}] must define 't_ms'")
        return dist


def _check_dist(dist: Mapping, where: str, lo: int, hi: int) -> None:
    if not dist:
        raise ProfileError(f"{where}: empty distribution")
    total = 0.0
    for key, prob in dist.items():
        try:
            value = int(key)
        except (TypeError, ValueError):
            raise ProfileError(f"{where}: non-integer outcome {key!r}") from None
        if not lo <= value <= hi:
            raise ProfileError(f"{where}: outcome {value} outside [{lo}, {hi}]")
        if not isinstance(prob, (int, float)) or prob < 0:
            raise ProfileError(f"{where}: bad probability for {key!r}")
        total += prob
    if abs(total - 1.0) > 1e-6:
        raise ProfileError(f"{where}: probabilities sum to {total}, expected 1")


def load_profile(path: str | Path) -> SimulationProfile:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile is not valid JSON: {exc}") from exc
    return SimulationProfile.from_dict(raw)


def dirac_profile(score: int = 4, diff: int = 0, t_ms: int = 5000) -> dict:
    """A degenerate profile: every answer identical.  Useful for pipeline
    identity checks, where the output tables must echo the inputs exactly."""
    return {
        "seed_scores": {str(score): 1.0},
        "likert": {"*": {"*": {str(score): 1.0}}},
        "trials": {"*": {"diff": {str(diff): 1.0}, "t_ms": {str(t_ms): 1.0}}},
    }


def _sample(rng: random.Random, dist: Mapping) -> int:
    outcomes = sorted(dist.items(), key=lambda kv: int(kv[0]))
    values = [int(k) for k, _ in outcomes]
    weights = [float(p) for _, p in outcomes]
    return rng.choices(values, weights=weights, k=1)[0]


def _participant(rng: random.Random) -> Participant:
    return Participant(
        age_band=rng.choice(_AGE_BANDS),
        gender=rng.choice(_GENDERS),
        education=rng.choice(_EDUCATION),
        occupation=rng.choice(_OCCUPATIONS),
        movie_frequency=rng.choice(_FREQUENCIES),
    )


def simulate_cohort(
    store: SessionStore,
    profile: SimulationProfile,
    n_sessions: int,
    seed: int,
) -> list[str]:
    """Run complete synthetic sessions through the store; returns their ids."""
    rng = random.Random(f"{seed}:cohort")
    session_ids = []
    for _ in range(n_sessions):
        session, _ack = store.create_session(
            _participant(rng), rng_seed=rng.getrandbits(63)
        )
        sid = session.session_id
        session_ids.append(sid)
        for task_index in range(len(session.seed_tasks)):
            store.submit_seed_rating(
                sid, task_index, _sample(rng, profile.seed_scores)
            )
        session = store.session(sid)
        for trial_index, trial in enumerate(session.trials):
            diff = _sample(rng, profile.diff_dist(trial.style))
            t_ms = _sample(rng, profile.t_ms_dist(trial.style))
            # r is drawn so that r - diff stays on the scale; the realized
            # difference then equals the drawn one exactly.
            r = rng.randint(max(1, 1 + diff), min(5, 5 + diff))
            store.record_explanation_rating(sid, trial_index, r, t_ms)
            store.record_detail_rating(sid, trial_index, r - diff)
        for style, metric in likert_cells():
            store.submit_likert(
                sid, style, metric, _sample(rng, profile.likert_dist(style, metric))
            )
    return session_ids


def simulate_to_log(
    log_path: str | Path,
    dataset: Dataset,
    profile: SimulationProfile,
    n_sessions: int,
    seed: int,
    artifacts: RecommenderArtifacts | None = None,
    config: RecommenderConfig | None = None,
) -> SessionStore:
    """Simulate a cohort into a fresh event log, deterministically."""
    if artifacts is None:
        artifacts = build_artifacts(dataset, config or scaled_config(dataset))
    id_rng = random.Random(f"{seed}:ids")
    store = SessionStore(
        log_path,
        dataset,
        artifacts,
        clock=LogicalClock(),
        id_factory=lambda: f"s{id_rng.getrandbits(64):016x}",
    )
    simulate_cohort(store, profile, n_sessions, seed)
    return store
