"""HTTP service hosting study sessions.

Stateless contract for the participant UI and the analysis tooling: every
write is durably appended before it is acknowledged, ``GET /next`` is the
single protocol cursor, and the explanation-only view is blinded (it
carries no movie fields beyond an opaque trial handle).
"""

from __future__ import annotations

import os
import random
import time
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .analytics import SessionView
from .domain import (
    METRIC_DESCRIPTIONS,
    ExplanationStyle,
    MetricId,
    Movie,
)
from .explanations import ExplanationError
from .ingest import Dataset, load_dataset
from .protocol import (
    LIKERT_COUNT,
    SEED_TASK_COUNT,
    TRIAL_COUNT,
    Participant,
    Phase,
    ProtocolError,
    Session,
    next_likert_cell,
)
from .recommender import (
    RecommenderArtifacts,
    RecommenderConfig,
    RecommenderError,
    build_artifacts,
    scaled_config,
)
from .store import SessionStore
from .tables import (
    InsufficientData,
    render_correlation,
    render_fuzzy,
    render_objective,
    render_subjective,
)


class DemographicsIn(BaseModel):
    age_band: str
    gender: str
    education: str
    occupation: str
    movie_frequency: str
    idempotency_key: str | None = None


class SeedRatingIn(BaseModel):
    task_index: int
    score: int
    idempotency_key: str | None = None


class ExplanationRatingIn(BaseModel):
    r: int
    t_ms: int
    idempotency_key: str | None = None


class DetailRatingIn(BaseModel):
    r_prime: int
    idempotency_key: str | None = None


class LikertIn(BaseModel):
    style: str
    metric: str
    score: int
    idempotency_key: str | None = None


def _movie_payload(movie: Movie) -> dict:
    return {
        "movie_id": movie.movie_id,
        "title": movie.title,
        "director": movie.director,
        "actors": list(movie.actors),
        "genres": list(movie.genres),
        "year": movie.year,
    }


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def task_descriptor(session: Session, dataset: Dataset) -> dict:
    """The phase-appropriate next task for a session.

    During a trial's explanation step the payload is blinded: explanation
    text and an opaque handle only, never the movie record.
    """
    if session.phase == Phase.SEED_RATING:
        for index, task in enumerate(session.seed_tasks):
            if task.score is None:
                return {
                    "kind": "seed_rating",
                    "task_index": index,
                    "movie": _movie_payload(dataset.movies[task.movie_id]),
                    "situation": task.situation.as_dict(),
                    "progress": {
                        "answered": session.seeds_answered,
                        "total": SEED_TASK_COUNT,
                    },
                }
    if session.phase == Phase.TRIALS:
        for index, trial in enumerate(session.trials):
            if trial.r_prime is not None:
                continue
            done = sum(1 for t in session.trials if t.complete)
            if trial.r is None:
                return {
                    "kind": "trial_explanation",
                    "trial_index": index,
                    "trial_handle": f"trial-{index}",
                    "explanation_text": trial.explanation.text,
                    "progress": {"completed": done, "total": TRIAL_COUNT},
                }
            return {
                "kind": "trial_detail",
                "trial_index": index,
                "style": trial.style.value,
                "explanation_text": trial.explanation.text,
                "movie": _movie_payload(dataset.movies[trial.movie_id]),
                "progress": {"completed": done, "total": TRIAL_COUNT},
            }
    if session.phase == Phase.QUESTIONNAIRE:
        cell = next_likert_cell(session)
        if cell is not None:
            style, metric = cell
            return {
                "kind": "likert",
                "style": style.value,
                "metric": metric.value,
                "metric_description": METRIC_DESCRIPTIONS[metric],
                "progress": {"answered": len(session.likert), "total": LIKERT_COUNT},
            }
    return {"kind": "complete", "export": "/export?format=ndjson"}


def create_app(
    dataset: Dataset,
    log_path: str | Path,
    config: RecommenderConfig | None = None,
    artifacts: RecommenderArtifacts | None = None,
    clock: Callable[[], float] = time.time,
    id_factory: Callable[[], str] | None = None,
    seed_rng: random.Random | None = None,
) -> FastAPI:
    """Build the application; recommender artifacts are computed once here."""
    if artifacts is None:
        artifacts = build_artifacts(dataset, config or scaled_config(dataset))
    store_kwargs: dict = {"clock": clock}
    if id_factory is not None:
        store_kwargs["id_factory"] = id_factory
    if seed_rng is not None:
        store_kwargs["seed_rng"] = seed_rng
    store = SessionStore(log_path, dataset, artifacts, **store_kwargs)

    app = FastAPI(title="explaineval study service")
    app.state.store = store
    # The participant UI is a static page that may be served from anywhere;
    # sessions are capability URLs, so cross-origin access is fine.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def guarded(fn: Callable[[], tuple[Session, dict]]) -> Response:
        try:
            session, ack = fn()
        except KeyError as exc:
            return _error(404, f"unknown session: {exc.args[0]}")
        except (ProtocolError, RecommenderError, ExplanationError) as exc:
            return _error(409, str(exc))
        except ValueError as exc:
            return _error(422, str(exc))
        return JSONResponse({"ok": True, **ack})

    @app.post("/sessions", status_code=201)
    def create_session(body: DemographicsIn) -> Response:
        participant = Participant(
            age_band=body.age_band,
            gender=body.gender,
            education=body.education,
            occupation=body.occupation,
            movie_frequency=body.movie_frequency,
        )
        try:
            session, ack = store.create_session(
                participant, idempotency_key=body.idempotency_key
            )
        except ValueError as exc:
            return _error(422, str(exc))
        return JSONResponse(
            status_code=201,
            content={
                "session_id": session.session_id,
                "next": task_descriptor(session, dataset),
            },
        )

    @app.get("/sessions/{session_id}/next")
    def next_task(session_id: str) -> Response:
        try:
            session = store.session(session_id)
        except KeyError:
            return _error(404, f"unknown session: {session_id}")
        return JSONResponse(task_descriptor(session, dataset))

    @app.post("/sessions/{session_id}/seed-ratings")
    def seed_rating(session_id: str, body: SeedRatingIn) -> Response:
        return guarded(
            lambda: store.submit_seed_rating(
                session_id, body.task_index, body.score,
                idempotency_key=body.idempotency_key,
            )
        )

    @app.post("/sessions/{session_id}/trials/{trial_index}/explanation-rating")
    def explanation_rating(
        session_id: str, trial_index: int, body: ExplanationRatingIn
    ) -> Response:
        return guarded(
            lambda: store.record_explanation_rating(
                session_id, trial_index, body.r, body.t_ms,
                idempotency_key=body.idempotency_key,
            )
        )

    @app.post("/sessions/{session_id}/trials/{trial_index}/detail-rating")
    def detail_rating(
        session_id: str, trial_index: int, body: DetailRatingIn
    ) -> Response:
        return guarded(
            lambda: store.record_detail_rating(
                session_id, trial_index, body.r_prime,
                idempotency_key=body.idempotency_key,
            )
        )

    @app.post("/sessions/{session_id}/likert")
    def likert(session_id: str, body: LikertIn) -> Response:
        def call() -> tuple[Session, dict]:
            style = ExplanationStyle.from_label(body.style)
            metric = MetricId.from_label(body.metric)
            return store.submit_likert(
                session_id, style, metric, body.score,
                idempotency_key=body.idempotency_key,
            )

        return guarded(call)

    @app.get("/export")
    def export(format: str = "ndjson") -> Response:
        if format != "ndjson":
            return _error(422, f"unsupported export format: {format!r}")
        return Response(
            content="".join(store.export_lines()),
            media_type="application/x-ndjson",
        )

    @app.get("/analysis/{table}")
    def analysis(
        table: str, format: str = "json", style: str = "Context-aware",
        source: str = "mixed",
    ) -> Response:
        if format not in ("text", "json"):
            return _error(422, f"unsupported format: {format!r}")
        views: list[SessionView] = store.views(complete_only=False)
        try:
            if table == "objective":
                rendered = render_objective(views, fmt=format)
            elif table == "subjective":
                rendered = render_subjective(views, fmt=format)
            elif table == "correlation":
                rendered = render_correlation(
                    views, style=ExplanationStyle.from_label(style),
                    source=source, fmt=format,
                )
            elif table == "fuzzy":
                rendered = render_fuzzy(views, fmt=format)
            else:
                return _error(404, f"unknown analysis table: {table!r}")
        except InsufficientData as exc:
            return _error(409, str(exc))
        except ValueError as exc:
            return _error(422, str(exc))
        media = "application/json" if format == "json" else "text/plain"
        return Response(content=rendered, media_type=media)

    return app


def create_app_from_env() -> FastAPI:
    """Factory for ``uvicorn 'explaineval.service:create_app_from_env'``.

    Environment variables: EXPLAINEVAL_RATINGS / _CATALOG / _SCHEMA for the
    dataset files (or EXPLAINEVAL_SYNTHETIC_SEED for a built-in synthetic
    dataset), EXPLAINEVAL_LOG for the event log, EXPLAINEVAL_SEED_BASE for
    deterministic ids and per-session seeds, EXPLAINEVAL_RECOMMENDER_CONFIG
    for the recommender configuration document.
    """
    ratings = os.environ.get("EXPLAINEVAL_RATINGS")
    if ratings:
        dataset = load_dataset(
            ratings,
            catalog_path=os.environ.get("EXPLAINEVAL_CATALOG") or None,
            schema_path=os.environ.get("EXPLAINEVAL_SCHEMA") or None,
        )
    elif os.environ.get("EXPLAINEVAL_SYNTHETIC_SEED"):
        from .simulate import synthetic_dataset

        dataset = synthetic_dataset(seed=int(os.environ["EXPLAINEVAL_SYNTHETIC_SEED"]))
    else:
        raise RuntimeError(
            "set EXPLAINEVAL_RATINGS (and optionally EXPLAINEVAL_CATALOG) or "
            "EXPLAINEVAL_SYNTHETIC_SEED"
        )
    config = None
    config_path = os.environ.get("EXPLAINEVAL_RECOMMENDER_CONFIG")
    if config_path:
        config = RecommenderConfig.from_file(config_path)
    kwargs: dict = {}
    seed_base = os.environ.get("EXPLAINEVAL_SEED_BASE")
    if seed_base:
        id_rng = random.Random(f"{seed_base}:ids")
        kwargs["id_factory"] = lambda: f"s{id_rng.getrandbits(64):016x}"
        kwargs["seed_rng"] = random.Random(f"{seed_base}:seeds")
    return create_app(
        dataset,
        log_path=os.environ.get("EXPLAINEVAL_LOG", "sessions.ndjson"),
        config=config,
        **kwargs,
    )
