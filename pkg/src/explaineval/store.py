"""Event-sourced session persistence.

Every accepted write is appended to a newline-delimited JSON log and
fsynced before it is acknowledged; materialized session snapshots are pure
functions of that log, so killing and restarting the process after any
acknowledged write loses nothing.  The log doubles as the export format
and as the input to offline analytics.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .analytics import LikertView, SessionView, TrialView
from .domain import ExplanationStyle, MetricId
from .ingest import Dataset
from .protocol import (
    MAX_DECISION_MS,
    Participant,
    Phase,
    Session,
    begin_trials,
    record_detail_rating,
    record_explanation_rating,
    start_session,
    submit_likert,
    submit_seed_rating,
)
from .recommender import RecommenderArtifacts

EVENT_SESSION_CREATED = "session_created"
EVENT_SEED_RATING = "seed_rating"
EVENT_EXPLANATION_RATING = "explanation_rating"
EVENT_DETAIL_RATING = "detail_rating"
EVENT_LIKERT = "likert"

#: Events a complete session comprises: 1 creation, 12 seed ratings,
#: 6 explanation ratings, 6 detail ratings, 36 questionnaire answers.
COMPLETE_SESSION_EVENT_COUNT = 61


@dataclass(frozen=True)
class Event:
    seq: int
    session_seq: int
    type: str
    session_id: str
    payload: dict
    ts: float
    idempotency_key: str | None = None

    def to_line(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "session_seq": self.session_seq,
                "type": self.type,
                "session_id": self.session_id,
                "payload": self.payload,
                "ts": self.ts,
                "idempotency_key": self.idempotency_key,
            },
            sort_keys=True,
            separators=(",", ":"),
        ) + "\n"

    @classmethod
    def from_line(cls, line: str) -> "Event":
        raw = json.loads(line)
        return cls(
            seq=raw["seq"],
            session_seq=raw["session_seq"],
            type=raw["type"],
            session_id=raw["session_id"],
            payload=raw["payload"],
            ts=raw["ts"],
            idempotency_key=raw.get("idempotency_key"),
        )


def _default_id_factory() -> str:
    return uuid.uuid4().hex


class LogicalClock:
    """Deterministic stand-in for the wall clock: 1, 2, 3, ...

    Replayed events keep their recorded timestamps, so a store reopened on
    an existing log continues after the largest one already written.
    """

    def __init__(self, start: float = 0.0) -> None:
        self._now = start

    def __call__(self) -> float:
        self._now += 1.0
        return self._now

    def observe(self, ts: float) -> None:
        self._now = max(self._now, ts)


class SessionStore:
    """Sessions materialized from (and persisted to) an append-only log.

    Per-session writes are serialized; the injectable clock and id factory
    exist so tests and simulations can be made fully deterministic.
    """

    def __init__(
        self,
        log_path: str | Path,
        dataset: Dataset,
        artifacts: RecommenderArtifacts,
        clock: Callable[[], float] = time.time,
        id_factory: Callable[[], str] = _default_id_factory,
        seed_rng: random.Random | None = None,
    ) -> None:
        self.log_path = Path(log_path)
        self.dataset = dataset
        self.artifacts = artifacts
        self._clock = clock
        self._id_factory = id_factory
        self._seed_rng = seed_rng if seed_rng is not None else random.Random()
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self._session_seq: dict[str, int] = {}
        self._acks: dict[tuple[str, str], dict] = {}
        self._seq = 0
        if self.log_path.exists():
            for line in self.log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    event = Event.from_line(line)
                    self._apply(event)
                    if isinstance(self._clock, LogicalClock):
                        self._clock.observe(event.ts)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.log_path.open("a", encoding="utf-8")

    # -- state transitions ---------------------------------------------------

    def _apply(self, event: Event) -> Session:
        """Advance the in-memory snapshot; identical for live and replayed events."""
        known = (
            EVENT_SESSION_CREATED,
            EVENT_SEED_RATING,
            EVENT_EXPLANATION_RATING,
            EVENT_DETAIL_RATING,
            EVENT_LIKERT,
        )
        if event.type not in known:
            raise ValueError(f"unknown event type: {event.type!r}")
        if event.type == EVENT_SESSION_CREATED:
            session = start_session(
                self.dataset,
                Participant.from_dict(event.payload["participant"]),
                rng_seed=event.payload["rng_seed"],
                session_id=event.session_id,
            )
        else:
            session = self.sessions[event.session_id]
            p = event.payload
            if event.type == EVENT_SEED_RATING:
                session = submit_seed_rating(session, p["task_index"], p["score"])
                if session.phase == Phase.TRIALS and not session.trials:
                    session = begin_trials(session, self.dataset, self.artifacts)
            elif event.type == EVENT_EXPLANATION_RATING:
                session = record_explanation_rating(
                    session, p["trial_index"], p["r"], p["t_ms"]
                )
            elif event.type == EVENT_DETAIL_RATING:
                session = record_detail_rating(session, p["trial_index"], p["r_prime"])
            else:
                session = submit_likert(
                    session,
                    ExplanationStyle.from_label(p["style"]),
                    MetricId.from_label(p["metric"]),
                    p["score"],
                )
        self.sessions[event.session_id] = session
        self._session_seq[event.session_id] = event.session_seq
        self._seq = max(self._seq, event.seq)
        if event.idempotency_key is not None:
            ack = self._ack(event, session)
            self._acks[(event.session_id, event.idempotency_key)] = ack
            if event.type == EVENT_SESSION_CREATED:
                self._acks[("", event.idempotency_key)] = ack
        return session

    @staticmethod
    def _ack(event: Event, session: Session) -> dict:
        return {
            "seq": event.seq,
            "session_seq": event.session_seq,
            "session_id": event.session_id,
            "phase": session.phase.value,
        }

    def _commit(
        self,
        type_: str,
        session_id: str,
        payload: dict,
        session: Session,
        idempotency_key: str | None,
    ) -> dict:
        """Append the event, fsync, then publish the new snapshot."""
        self._seq += 1
        session_seq = self._session_seq.get(session_id, 0) + 1
        event = Event(
            seq=self._seq,
            session_seq=session_seq,
            type=type_,
            session_id=session_id,
            payload=payload,
            ts=self._clock(),
            idempotency_key=idempotency_key,
        )
        self._fh.write(event.to_line())
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.sessions[session_id] = session
        self._session_seq[session_id] = session_seq
        ack = self._ack(event, session)
        if idempotency_key is not None:
            self._acks[(session_id, idempotency_key)] = ack
        return ack

    def _cached_ack(self, session_id: str, key: str | None) -> dict | None:
        if key is None:
            return None
        return self._acks.get((session_id, key))

    # -- public write API ----------------------------------------------------

    def create_session(
        self,
        participant: Participant,
        rng_seed: int | None = None,
        idempotency_key: str | None = None,
    ) -> tuple[Session, dict]:
        with self._lock:
            cached = self._cached_ack("", idempotency_key)
            if cached is not None:
                return self.sessions[cached["session_id"]], cached
            if rng_seed is None:
                rng_seed = self._seed_rng.getrandbits(63)
            session_id = self._id_factory()
            while session_id in self.sessions:
                session_id = self._id_factory()
            session = start_session(
                self.dataset, participant, rng_seed, session_id=session_id
            )
            ack = self._commit(
                EVENT_SESSION_CREATED,
                session_id,
                {"participant": participant.as_dict(), "rng_seed": rng_seed},
                session,
                idempotency_key,
            )
            if idempotency_key is not None:
                self._acks[("", idempotency_key)] = ack
            return session, ack

    def _write(
        self,
        session_id: str,
        type_: str,
        payload: dict,
        apply_fn: Callable[[Session], Session],
        idempotency_key: str | None,
    ) -> tuple[Session, dict]:
        with self._lock:
            cached = self._cached_ack(session_id, idempotency_key)
            if cached is not None:
                return self.sessions[session_id], cached
            session = self.session(session_id)
            updated = apply_fn(session)
            ack = self._commit(type_, session_id, payload, updated, idempotency_key)
            return updated, ack

    def submit_seed_rating(
        self,
        session_id: str,
        task_index: int,
        score: int,
        idempotency_key: str | None = None,
    ) -> tuple[Session, dict]:
        def apply_fn(session: Session) -> Session:
            updated = submit_seed_rating(session, task_index, score)
            if updated.phase == Phase.TRIALS and not updated.trials:
                updated = begin_trials(updated, self.dataset, self.artifacts)
            return updated

        return self._write(
            session_id,
            EVENT_SEED_RATING,
            {"task_index": task_index, "score": score},
            apply_fn,
            idempotency_key,
        )

    def record_explanation_rating(
        self,
        session_id: str,
        trial_index: int,
        r: int,
        t_ms: int,
        idempotency_key: str | None = None,
    ) -> tuple[Session, dict]:
        session = self.session(session_id)
        if not 0 <= trial_index < len(session.trials):
            raise ValueError(f"trial index out of range: {trial_index}")
        capped = min(t_ms, MAX_DECISION_MS) if isinstance(t_ms, int) else t_ms
        payload = {
            "trial_index": trial_index,
            "style": session.trials[trial_index].style.value,
            "r": r,
            "t_ms": capped,
        }
        return self._write(
            session_id,
            EVENT_EXPLANATION_RATING,
            payload,
            lambda s: record_explanation_rating(s, trial_index, r, capped),
            idempotency_key,
        )

    def record_detail_rating(
        self,
        session_id: str,
        trial_index: int,
        r_prime: int,
        idempotency_key: str | None = None,
    ) -> tuple[Session, dict]:
        session = self.session(session_id)
        if not 0 <= trial_index < len(session.trials):
            raise ValueError(f"trial index out of range: {trial_index}")
        payload = {
            "trial_index": trial_index,
            "style": session.trials[trial_index].style.value,
            "r_prime": r_prime,
        }
        return self._write(
            session_id,
            EVENT_DETAIL_RATING,
            payload,
            lambda s: record_detail_rating(s, trial_index, r_prime),
            idempotency_key,
        )

    def submit_likert(
        self,
        session_id: str,
        style: ExplanationStyle,
        metric: MetricId,
        score: int,
        idempotency_key: str | None = None,
    ) -> tuple[Session, dict]:
        return self._write(
            session_id,
            EVENT_LIKERT,
            {"style": style.value, "metric": metric.value, "score": score},
            lambda s: submit_likert(s, style, metric, score),
            idempotency_key,
        )

    # -- reads -----------------------------------------------------------------

    def session(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise KeyError(session_id)
        return self.sessions[session_id]

    def export_lines(self) -> Iterator[str]:
        """The raw log, byte for byte."""
        self._fh.flush()
        if not self.log_path.exists():
            return
        with self.log_path.open("r", encoding="utf-8") as fh:
            yield from fh

    def views(self, complete_only: bool = True) -> list[SessionView]:
        out = []
        for session in self.sessions.values():
            view = session_view(session)
            if not complete_only or view.complete:
                out.append(view)
        return out

    def close(self) -> None:
        self._fh.close()


def session_view(session: Session) -> SessionView:
    return SessionView(
        session_id=session.session_id,
        trials=tuple(
            TrialView(style=t.style, r=t.r, r_prime=t.r_prime, t_ms=t.t_ms)
            for t in session.trials
        ),
        likert=tuple(
            LikertView(l.style, l.metric, l.score) for l in session.likert
        ),
    )


def views_from_events(events: Iterable[Event]) -> list[SessionView]:
    """Analytics projections straight from a log, no dataset required.

    Trials appear once they receive their first rating; the rating events
    carry the trial's style, which is all analytics needs.
    """
    order: list[str] = []
    trials: dict[str, dict[int, dict]] = {}
    likert: dict[str, list[LikertView]] = {}
    for event in events:
        sid = event.session_id
        if sid not in trials:
            order.append(sid)
            trials[sid] = {}
            likert[sid] = []
        p = event.payload
        if event.type == EVENT_EXPLANATION_RATING:
            entry = trials[sid].setdefault(p["trial_index"], {})
            entry["style"] = ExplanationStyle.from_label(p["style"])
            entry["r"] = p["r"]
            entry["t_ms"] = p["t_ms"]
        elif event.type == EVENT_DETAIL_RATING:
            entry = trials[sid].setdefault(p["trial_index"], {})
            entry["style"] = ExplanationStyle.from_label(p["style"])
            entry["r_prime"] = p["r_prime"]
        elif event.type == EVENT_LIKERT:
            likert[sid].append(
                LikertView(
                    ExplanationStyle.from_label(p["style"]),
                    MetricId.from_label(p["metric"]),
                    p["score"],
                )
            )
    views = []
    for sid in order:
        views.append(
            SessionView(
                session_id=sid,
                trials=tuple(
                    TrialView(
                        style=entry["style"],
                        r=entry.get("r"),
                        r_prime=entry.get("r_prime"),
                        t_ms=entry.get("t_ms"),
                    )
                    for _, entry in sorted(trials[sid].items())
                ),
                likert=tuple(likert[sid]),
            )
        )
    return views


def read_events(path: str | Path) -> list[Event]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(Event.from_line(line))
    return out
