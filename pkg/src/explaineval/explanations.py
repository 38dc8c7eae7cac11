"""Rendering of the six explanation styles.

Every style produces plain text only, deterministically, together with the
named statistics the sentence was built from.  Rounding is half-up: one
decimal for means, whole numbers for percentages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Mapping, Sequence

from .domain import (
    LOCATION,
    MOOD,
    PHYSICAL_WELLNESS,
    STUDY_FACTORS,
    WEATHER,
    ContextualSituation,
    ExplanationStyle,
    Movie,
)
from .ingest import Dataset


class ExplanationError(Exception):
    pass


@dataclass(frozen=True)
class Explanation:
    style: ExplanationStyle
    text: str
    evidence: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("explanation text must be non-empty")


def _mean_1dp(scores: Sequence[int]) -> float:
    mean = Decimal(sum(scores)) / Decimal(len(scores))
    return float(mean.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _pct(numerator: int, denominator: int) -> int:
    pct = Decimal(100 * numerator) / Decimal(denominator)
    return int(pct.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def _scores_for(ds: Dataset, movie_id: str) -> list[int]:
    return [r.score for r in ds.ratings if r.movie_id == movie_id]


def explain_avg(ds: Dataset, movie_id: str) -> Explanation:
    """'The average rating of this movie is 3.8'."""
    scores = _scores_for(ds, movie_id)
    if not scores:
        raise ExplanationError(f"movie {movie_id} has no ratings to average")
    avg = _mean_1dp(scores)
    return Explanation(
        style=ExplanationStyle.AVG,
        text=f"The average rating of this movie is {avg:.1f}",
        evidence={"avg_rating": avg, "n_ratings": len(scores)},
    )


def explain_per(ds: Dataset, movie_id: str, threshold: int = 4) -> Explanation:
    """'80 percent of users rate this movie more than 4'.

    The wording is kept as-is; the count is of scores >= threshold, since a
    strict reading on a 5-point scale would only ever count fives.
    """
    scores = _scores_for(ds, movie_id)
    if not scores:
        raise ExplanationError(f"movie {movie_id} has no ratings")
    pct = _pct(sum(1 for s in scores if s >= threshold), len(scores))
    return Explanation(
        style=ExplanationStyle.PER,
        text=f"{pct} percent of users rate this movie more than {threshold}",
        evidence={"pct_above": pct, "threshold": threshold, "n_ratings": len(scores)},
    )


def _user_movie_means(ds: Dataset) -> dict[str, dict[str, float]]:
    acc: dict[str, dict[str, list[int]]] = {}
    for r in ds.ratings:
        acc.setdefault(r.user_id, {}).setdefault(r.movie_id, []).append(r.score)
    return {
        user: {m: sum(v) / len(v) for m, v in by_movie.items()}
        for user, by_movie in acc.items()
    }


def _user_pcc(a: Mapping[str, float], b: Mapping[str, float]) -> float | None:
    common = sorted(set(a) & set(b))
    if len(common) < 2:
        return None
    xs = [a[m] for m in common]
    ys = [b[m] for m in common]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.sqrt(
        sum((x - mx) ** 2 for x in xs) * sum((y - my) ** 2 for y in ys)
    )
    if den == 0.0:
        return None
    return max(-1.0, min(1.0, num / den))


def explain_simu(
    ds: Dataset, movie_id: str, user_id: str, k: int = 20
) -> Explanation:
    """'The average rating of users whose preferences are similar to yours is 4.1'.

    Similar users are the k nearest by user-user Pearson correlation over
    co-rated movies (two or more required).  When none of them rated the
    movie, the plain average wording is used instead and the fallback is
    recorded in the evidence so the protocol layer can see it.
    """
    means = _user_movie_means(ds)
    me = means.get(user_id)
    if me is None:
        return _simu_fallback(ds, movie_id, "user has no ratings")
    sims = []
    for other, profile in means.items():
        if other == user_id:
            continue
        s = _user_pcc(me, profile)
        if s is not None:
            sims.append((s, other))
    sims.sort(key=lambda t: (-t[0], t[1]))
    neighbours = [other for _, other in sims[:k]]
    ratings = [means[o][movie_id] for o in neighbours if movie_id in means[o]]
    if not ratings:
        return _simu_fallback(ds, movie_id, "no similar user rated this movie")
    avg = float(
        (Decimal(str(sum(ratings))) / Decimal(len(ratings))).quantize(
            Decimal("0.1"), rounding=ROUND_HALF_UP
        )
    )
    return Explanation(
        style=ExplanationStyle.SIMU,
        text=f"The average rating of users whose preferences are similar to yours is {avg:.1f}",
        evidence={"simu_avg": avg, "n_neighbours": len(ratings),
                  "neighbours": neighbours},
    )


def _simu_fallback(ds: Dataset, movie_id: str, reason: str) -> Explanation:
    base = explain_avg(ds, movie_id)
    return Explanation(
        style=ExplanationStyle.SIMU,
        text=base.text,
        evidence={**base.evidence, "fallback": "avg", "fallback_reason": reason},
    )


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def explain_simi(user_history: Sequence[Movie], movie: Movie) -> Explanation:
    """'This movie is similar to movies you watched before'."""
    if not user_history:
        raise ExplanationError("cannot compare against an empty watch history")
    target = frozenset(movie.genres)
    ranked = sorted(
        user_history,
        key=lambda m: (-_jaccard(frozenset(m.genres), target), m.movie_id),
    )
    return Explanation(
        style=ExplanationStyle.SIMI,
        text="This movie is similar to movies you watched before",
        evidence={
            "similar_movies": [m.movie_id for m in ranked[:3]],
            "history_size": len(user_history),
        },
    )


def explain_content(movie: Movie) -> Explanation:
    """'This is a movie directed (acted) by ...', naming up to two actors."""
    actors = list(movie.actors[:2])
    if movie.director and actors:
        text = (
            f"This is a movie directed by {movie.director} "
            f"and acted by {' and '.join(actors)}"
        )
    elif movie.director:
        text = f"This is a movie directed by {movie.director}"
    elif actors:
        text = f"This is a movie acted by {' and '.join(actors)}"
    else:
        raise ExplanationError(
            f"movie {movie.movie_id} has neither director nor actors"
        )
    return Explanation(
        style=ExplanationStyle.CONTENT,
        text=text,
        evidence={"director": movie.director, "actors": actors},
    )


_PHRASE_ORDER = (WEATHER, PHYSICAL_WELLNESS, LOCATION, MOOD)

_phrase_cache: dict[str, dict[tuple[str, str], str]] = {}


def load_phrase_table(path: str | Path | None = None) -> dict[tuple[str, str], str]:
    """Phrases for contextual conditions, from the bundled resource by default."""
    key = str(path) if path else "<default>"
    if key not in _phrase_cache:
        if path is None:
            text = (
                importlib_resources.files("explaineval.resources")
                .joinpath("context_phrases.txt")
                .read_text(encoding="utf-8")
            )
        else:
            text = Path(path).read_text(encoding="utf-8")
        table: dict[tuple[str, str], str] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            lhs, phrase = line.split("=", 1)
            factor_id, condition = lhs.strip().split(".", 1)
            table[(factor_id, condition)] = phrase.strip()
        _phrase_cache[key] = table
    return _phrase_cache[key]


def explain_context_aware(
    situation: ContextualSituation,
    phrase_table: Mapping[tuple[str, str], str] | None = None,
) -> Explanation:
    """'The system suppose that you would like to watch this movie when
    it shines, healthy you are at home and in good moods'."""
    if phrase_table is None:
        phrase_table = load_phrase_table()
    missing = [f for f in STUDY_FACTORS if situation.get(f) is None]
    if missing:
        raise ExplanationError(
            f"situation does not assign study factors: {', '.join(missing)}"
        )

    def phrase(factor_id: str) -> str:
        condition = situation.get(factor_id)
        assert condition is not None
        return phrase_table.get((factor_id, condition), condition.replace("_", " "))

    weather, wellness, location, mood = (phrase(f) for f in _PHRASE_ORDER)
    text = (
        "The system suppose that you would like to watch this movie "
        f"when {weather}, {wellness} {location} and {mood}"
    )
    return Explanation(
        style=ExplanationStyle.CONTEXT_AWARE,
        text=text,
        evidence={"situation": situation.restrict(STUDY_FACTORS).as_dict()},
    )


def render_explanation(
    style: ExplanationStyle,
    ds: Dataset,
    movie_id: str,
    user_id: str,
    user_history: Sequence[Movie],
    situation: ContextualSituation,
    neighbourhood_k: int = 20,
) -> Explanation:
    """Render any style for one trial from the session's context."""
    if style == ExplanationStyle.AVG:
        return explain_avg(ds, movie_id)
    if style == ExplanationStyle.PER:
        return explain_per(ds, movie_id)
    if style == ExplanationStyle.SIMU:
        return explain_simu(ds, movie_id, user_id, k=neighbourhood_k)
    if style == ExplanationStyle.SIMI:
        return explain_simi(user_history, ds.movies[movie_id])
    if style == ExplanationStyle.CONTENT:
        return explain_content(ds.movies[movie_id])
    return explain_context_aware(situation)


def feasible_styles(
    ds: Dataset,
    movie_id: str,
    user_history: Sequence[Movie],
    situation: ContextualSituation,
) -> set[ExplanationStyle]:
    """Styles whose hard preconditions hold for this movie.

    Simu needs ratings like Avg does: when no similar user rated the
    movie it falls back to the plain average, which is undefined for an
    unrated movie.
    """
    movie = ds.movies.get(movie_id)
    rated = any(r.movie_id == movie_id for r in ds.ratings)
    feasible = set()
    if rated:
        feasible |= {
            ExplanationStyle.AVG,
            ExplanationStyle.PER,
            ExplanationStyle.SIMU,
        }
    if user_history:
        feasible.add(ExplanationStyle.SIMI)
    if movie is not None and (movie.director or movie.actors):
        feasible.add(ExplanationStyle.CONTENT)
    if situation.assigns_all(STUDY_FACTORS):
        feasible.add(ExplanationStyle.CONTEXT_AWARE)
    return feasible
