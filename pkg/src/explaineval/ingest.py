"""Loading of contextual-ratings files and movie catalogs.

The input is delimited UTF-8 text with a header row.  Core columns default
to ``userID``, ``itemID``, ``rating``; every other column is treated as a
contextual factor.  Factor values may be condition names or 1-based integer
codes into the factor's vocabulary; the sentinel ``-1`` (or an empty cell)
means the factor was not recorded for that rating.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .domain import (
    DEFAULT_VOCABULARIES,
    STUDY_FACTORS,
    ContextualFactor,
    ContextualRating,
    ContextualSituation,
    Movie,
)

_DELIMITERS = (",", ";", "\t")
_ABSENT_VALUES = {"-1", ""}

# Common source-file spellings of the four study factors.
_FACTOR_ALIASES = {
    "physical": "PhysicalWellness",
    "physicalwellness": "PhysicalWellness",
    "physical_wellness": "PhysicalWellness",
    "mood": "Mood",
    "location": "Location",
    "weather": "Weather",
}

_DEFAULT_COLUMNS = {"user": "userID", "item": "itemID", "rating": "rating",
                    "timestamp": "timestamp"}

_CATALOG_COLUMNS = ("movieID", "title", "director", "actors", "genres", "year")
_LIST_SEP = "|"

_MAX_REJECTED_FRACTION = 0.10


class IngestError(Exception):
    """Unrecoverable problem while loading a dataset."""


@dataclass(frozen=True)
class RowDiagnostic:
    line_no: int
    reason: str


@dataclass(frozen=True)
class Dataset:
    """An immutable in-memory dataset of contextual ratings.

    ``diagnostics`` records rejected rows and is excluded from equality so
    that a round-tripped dataset compares equal to its source.
    """

    ratings: tuple[ContextualRating, ...]
    movies: dict[str, Movie]
    users: frozenset[str]
    factors: tuple[ContextualFactor, ...]
    diagnostics: tuple[RowDiagnostic, ...] = field(default=(), compare=False)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_movies(self) -> int:
        return len(self.movies)

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    def factor(self, factor_id: str) -> ContextualFactor:
        for f in self.factors:
            if f.factor_id == factor_id:
                return f
        raise KeyError(factor_id)

    def with_ratings(self, ratings: Iterable[ContextualRating]) -> "Dataset":
        """A view of this dataset restricted to the given ratings."""
        kept = tuple(ratings)
        return Dataset(
            ratings=kept,
            movies=self.movies,
            users=frozenset(r.user_id for r in kept),
            factors=self.factors,
        )

    def extended(self, extra: Iterable[ContextualRating]) -> "Dataset":
        """This dataset plus additional ratings (e.g. a session's seed ratings)."""
        added = tuple(extra)
        for r in added:
            if r.movie_id not in self.movies:
                raise ValueError(f"rating references unknown movie {r.movie_id!r}")
        return Dataset(
            ratings=self.ratings + added,
            movies=self.movies,
            users=self.users | {r.user_id for r in added},
            factors=self.factors,
        )


@dataclass(frozen=True)
class DatasetStats:
    n_users: int
    n_movies: int
    n_ratings: int
    ratings_per_user: float
    movies_per_user: float


def dataset_stats(ds: Dataset) -> DatasetStats:
    """Summary counts plus both ratings-per-user and distinct-movies-per-user."""
    if ds.n_users == 0:
        return DatasetStats(0, ds.n_movies, 0, 0.0, 0.0)
    distinct: dict[str, set[str]] = {}
    for r in ds.ratings:
        distinct.setdefault(r.user_id, set()).add(r.movie_id)
    movies_per_user = sum(len(v) for v in distinct.values()) / ds.n_users
    return DatasetStats(
        n_users=ds.n_users,
        n_movies=ds.n_movies,
        n_ratings=ds.n_ratings,
        ratings_per_user=ds.n_ratings / ds.n_users,
        movies_per_user=movies_per_user,
    )


def _detect_delimiter(header_line: str) -> str:
    counts = {d: header_line.count(d) for d in _DELIMITERS}
    best = max(counts, key=lambda d: counts[d])
    if counts[best] == 0:
        raise IngestError("could not detect a delimiter in the header row")
    return best


def _split(line: str, delim: str) -> list[str]:
    return [cell.strip() for cell in line.rstrip("\n").rstrip("\r").split(delim)]


def _parse_kv(path: str | Path) -> dict[str, str]:
    """Parse a small ``key = value`` document, ignoring blanks and # comments."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line:
            key, value = line.split(":", 1)
        else:
            raise IngestError(f"malformed mapping line: {raw!r}")
        out[key.strip()] = value.strip()
    return out


def load_schema(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Read a factor schema: one ``Factor: cond1, cond2, ...`` line per factor."""
    vocab: dict[str, tuple[str, ...]] = {}
    for key, value in _parse_kv(path).items():
        conditions = tuple(c.strip() for c in value.split(",") if c.strip())
        if not conditions:
            raise IngestError(f"factor {key!r}: empty vocabulary in schema")
        vocab[key] = conditions
    return vocab


def _canonical_factor(column: str) -> str:
    return _FACTOR_ALIASES.get(column.lower(), column)


def _load_catalog(path: str | Path) -> dict[str, Movie]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise IngestError(f"catalog file {path} is empty")
    delim = _detect_delimiter(lines[0])
    header = _split(lines[0], delim)
    idx = {name: i for i, name in enumerate(header)}
    if "movieID" not in idx or "title" not in idx:
        raise IngestError("catalog header must include movieID and title")
    movies: dict[str, Movie] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = _split(line, delim)

        def cell(name: str) -> str:
            i = idx.get(name)
            return cells[i] if i is not None and i < len(cells) else ""

        movie_id = cell("movieID")
        if not movie_id:
            raise IngestError(f"catalog line {line_no}: missing movieID")
        year_text = cell("year")
        movies[movie_id] = Movie(
            movie_id=movie_id,
            title=cell("title") or f"Movie {movie_id}",
            director=cell("director"),
            actors=tuple(a for a in cell("actors").split(_LIST_SEP) if a),
            genres=tuple(g for g in cell("genres").split(_LIST_SEP) if g),
            year=int(year_text) if year_text.isdigit() else 0,
        )
    return movies


def load_dataset(
    ratings_path: str | Path,
    catalog_path: str | Path | None = None,
    schema_path: str | Path | None = None,
    column_map: Mapping[str, str] | str | Path | None = None,
) -> Dataset:
    """Load a ratings file (and optional catalog) into a :class:`Dataset`.

    Rows with an out-of-range or non-integer score are rejected and recorded
    as diagnostics; more than 10% rejected rows is a hard failure.  Factor
    cells holding the sentinel ``-1`` keep the rating but leave that factor
    unassigned in the rating's situation.
    """
    ratings_path = Path(ratings_path)
    if not ratings_path.exists():
        raise IngestError(f"ratings file not found: {ratings_path}")
    if isinstance(column_map, (str, Path)):
        column_map = _parse_kv(column_map)
    columns = dict(_DEFAULT_COLUMNS)
    factor_renames: dict[str, str] = {}
    if column_map:
        for key, value in column_map.items():
            if key in columns:
                columns[key] = value
            elif key.startswith("factor."):
                factor_renames[key[len("factor."):]] = value
            else:
                raise IngestError(f"unknown column-map key: {key!r}")

    schema_vocab = load_schema(schema_path) if schema_path else {}

    lines = ratings_path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip():
        raise IngestError("ratings file has no header row")
    delim = _detect_delimiter(lines[0])
    header = _split(lines[0], delim)
    idx = {name: i for i, name in enumerate(header)}
    for role in ("user", "item", "rating"):
        if columns[role] not in idx:
            raise IngestError(
                f"malformed header: required column {columns[role]!r} missing"
            )
    core_cols = {columns["user"], columns["item"], columns["rating"],
                 columns["timestamp"]}
    metadata_cols = {"title", "director", "actors", "genres", "year"}
    factor_cols = [
        c for c in header if c not in core_cols and c not in metadata_cols
    ]

    # Factor vocabularies: schema file wins, then built-in defaults for the
    # study factors, then whatever values the file itself uses.
    factor_ids = {c: factor_renames.get(c, _canonical_factor(c)) for c in factor_cols}
    declared: dict[str, tuple[str, ...]] = {}
    for col in factor_cols:
        fid = factor_ids[col]
        if fid in schema_vocab:
            declared[fid] = schema_vocab[fid]
        elif fid in DEFAULT_VOCABULARIES:
            declared[fid] = DEFAULT_VOCABULARIES[fid]
    observed: dict[str, list[str]] = {factor_ids[c]: [] for c in factor_cols}

    embedded_catalog = catalog_path is None and "title" in idx
    movies: dict[str, Movie] = {}
    if catalog_path is not None:
        movies = _load_catalog(catalog_path)

    ratings: list[ContextualRating] = []
    diagnostics: list[RowDiagnostic] = []
    n_rows = 0

    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        n_rows += 1
        cells = _split(line, delim)

        def cell(name: str) -> str:
            i = idx.get(name)
            return cells[i] if i is not None and i < len(cells) else ""

        score_text = cell(columns["rating"])
        try:
            score = int(score_text)
        except ValueError:
            diagnostics.append(
                RowDiagnostic(line_no, f"non-integer score {score_text!r}")
            )
            continue
        if not 1 <= score <= 5:
            diagnostics.append(
                RowDiagnostic(line_no, f"score {score} outside [1, 5]")
            )
            continue
        user_id = cell(columns["user"])
        movie_id = cell(columns["item"])
        if not user_id or not movie_id:
            diagnostics.append(RowDiagnostic(line_no, "missing user or item id"))
            continue
        if catalog_path is not None and movie_id not in movies:
            diagnostics.append(
                RowDiagnostic(line_no, f"unknown movie {movie_id!r}")
            )
            continue

        assignments: dict[str, str] = {}
        bad_condition = None
        for col in factor_cols:
            raw = cell(col)
            if raw in _ABSENT_VALUES:
                continue
            fid = factor_ids[col]
            vocab = declared.get(fid)
            if vocab is not None:
                if raw in vocab:
                    condition = raw
                elif raw.lstrip("-").isdigit() and 1 <= int(raw) <= len(vocab):
                    condition = vocab[int(raw) - 1]
                else:
                    bad_condition = (col, raw)
                    break
            else:
                condition = raw
                if condition not in observed[fid]:
                    observed[fid].append(condition)
            assignments[fid] = condition
        if bad_condition is not None:
            col, raw = bad_condition
            diagnostics.append(
                RowDiagnostic(line_no, f"column {col!r}: unknown condition {raw!r}")
            )
            continue

        ts_text = cell(columns["timestamp"])
        timestamp = int(ts_text) if ts_text.lstrip("-").isdigit() else 0

        if movie_id not in movies:
            if embedded_catalog:
                year_text = cell("year")
                movies[movie_id] = Movie(
                    movie_id=movie_id,
                    title=cell("title") or f"Movie {movie_id}",
                    director=cell("director"),
                    actors=tuple(a for a in cell("actors").split(_LIST_SEP) if a),
                    genres=tuple(g for g in cell("genres").split(_LIST_SEP) if g),
                    year=int(year_text) if year_text.isdigit() else 0,
                )
            elif catalog_path is None:
                movies[movie_id] = Movie(movie_id=movie_id, title=f"Movie {movie_id}")

        ratings.append(
            ContextualRating(
                user_id=user_id,
                movie_id=movie_id,
                score=score,
                situation=ContextualSituation.of(assignments),
                timestamp=timestamp,
            )
        )

    # A single bad row is always tolerated so tiny hand fixtures load; past
    # that, more than 10% rejections points at a systematically bad file.
    if n_rows and len(diagnostics) > max(1.0, _MAX_REJECTED_FRACTION * n_rows):
        raise IngestError(
            f"{len(diagnostics)} of {n_rows} rows rejected "
            f"(>{_MAX_REJECTED_FRACTION:.0%}); first: "
            f"line {diagnostics[0].line_no}: {diagnostics[0].reason}"
        )

    factors = tuple(
        ContextualFactor(fid, declared.get(fid) or tuple(observed.get(fid) or ("n/a",)))
        for fid in dict.fromkeys(factor_ids[c] for c in factor_cols)
    )
    return Dataset(
        ratings=tuple(ratings),
        movies=movies,
        users=frozenset(r.user_id for r in ratings),
        factors=factors,
        diagnostics=tuple(diagnostics),
    )


def export_dataset(ds: Dataset, path: str | Path) -> None:
    """Write the canonical newline-delimited record export."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for f in ds.factors:
            fh.write(_record("factor", factor_id=f.factor_id,
                             vocabulary=list(f.vocabulary)))
        for m in sorted(ds.movies.values(), key=lambda m: m.movie_id):
            fh.write(_record("movie", movie_id=m.movie_id, title=m.title,
                             director=m.director, actors=list(m.actors),
                             genres=list(m.genres), year=m.year))
        for r in ds.ratings:
            fh.write(_record("rating", user_id=r.user_id, movie_id=r.movie_id,
                             score=r.score, situation=r.situation.as_dict(),
                             timestamp=r.timestamp))


def _record(kind: str, **payload: object) -> str:
    return json.dumps({"kind": kind, **payload}, sort_keys=True) + "\n"


def load_export(path: str | Path) -> Dataset:
    """Read a file written by :func:`export_dataset` back into a Dataset."""
    factors: list[ContextualFactor] = []
    movies: dict[str, Movie] = {}
    ratings: list[ContextualRating] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec.pop("kind", None)
        if kind == "factor":
            factors.append(
                ContextualFactor(rec["factor_id"], tuple(rec["vocabulary"]))
            )
        elif kind == "movie":
            movies[rec["movie_id"]] = Movie(
                movie_id=rec["movie_id"], title=rec["title"],
                director=rec["director"], actors=tuple(rec["actors"]),
                genres=tuple(rec["genres"]), year=rec["year"],
            )
        elif kind == "rating":
            ratings.append(
                ContextualRating(
                    user_id=rec["user_id"], movie_id=rec["movie_id"],
                    score=rec["score"],
                    situation=ContextualSituation.of(rec["situation"]),
                    timestamp=rec["timestamp"],
                )
            )
        else:
            raise IngestError(f"line {line_no}: unknown record kind {kind!r}")
    return Dataset(
        ratings=tuple(ratings),
        movies=movies,
        users=frozenset(r.user_id for r in ratings),
        factors=tuple(factors),
    )
