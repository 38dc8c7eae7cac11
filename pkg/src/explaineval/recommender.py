"""Context-aware recommendation pipeline.

Six stages: cluster movies by their rating vectors, correlate each
contextual condition with the ratings of every cluster, represent
conditions by those correlation vectors, measure how similar two
contextual situations are, select the local slice of ratings whose
situations resemble the target, and run a plain item-based collaborative
filter on that slice.

All operations are pure over an immutable dataset.  Item order is
canonicalized (sorted movie ids) before clustering, so shuffling the input
rows cannot change any result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import STUDY_FACTORS, ContextualSituation
from .ingest import Dataset

#: A contextual condition, qualified by its factor.
ConditionKey = tuple[str, str]


class RecommenderError(Exception):
    pass


class NoCandidatesError(RecommenderError):
    """Every available item is excluded or already rated by the user."""


@dataclass(frozen=True)
class RecommenderConfig:
    n_clusters: int = 10
    linkage: str = "average"
    similarity_threshold: float = 0.5
    neighborhood_k: int = 20
    top_n: int = 6
    min_local_ratings: int = 50

    def __post_init__(self) -> None:
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.linkage not in ("average", "complete", "single"):
            raise ValueError(f"unknown linkage: {self.linkage!r}")
        if not -1.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in [-1, 1]")
        if self.neighborhood_k < 1 or self.top_n < 1:
            raise ValueError("neighborhood_k and top_n must be >= 1")
        if self.min_local_ratings < 0:
            raise ValueError("min_local_ratings must be >= 0")

    @classmethod
    def from_file(cls, path) -> "RecommenderConfig":
        from .ingest import _parse_kv

        raw = _parse_kv(path)
        kwargs: dict[str, object] = {}
        for key, value in raw.items():
            if key in ("n_clusters", "neighborhood_k", "top_n", "min_local_ratings"):
                kwargs[key] = int(value)
            elif key in ("similarity_threshold",):
                kwargs[key] = float(value)
            elif key == "linkage":
                kwargs[key] = value
            else:
                raise ValueError(f"unknown recommender config key: {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class ClusterAssignment:
    cluster_of: dict[str, int]
    n_clusters: int

    def members(self, cluster: int) -> tuple[str, ...]:
        return tuple(sorted(m for m, c in self.cluster_of.items() if c == cluster))


@dataclass(frozen=True)
class ConditionProfile:
    """Per-cluster correlation between one condition and the ratings.

    ``None`` marks clusters where the correlation is undefined (fewer than
    two ratings, or no variance on either side).
    """

    pcc_by_cluster: tuple[float | None, ...]

    def dense(self) -> np.ndarray:
        """The profile as a vector with undefined entries set to 0."""
        return np.asarray(
            [0.0 if v is None else v for v in self.pcc_by_cluster], dtype=float
        )


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Product-moment correlation; ``None`` when either side is constant."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("pearson requires at least 2 observations")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        return None
    r = float(dx @ dy) / denom
    return max(-1.0, min(1.0, r))


def _item_vectors(ds: Dataset) -> dict[str, dict[str, float]]:
    """Per movie: user -> mean score (a user may rate a movie in several
    situations; the mean is their preference signal for the movie)."""
    sums: dict[str, dict[str, list[float]]] = {}
    for r in ds.ratings:
        sums.setdefault(r.movie_id, {}).setdefault(r.user_id, []).append(r.score)
    return {
        movie: {user: sum(v) / len(v) for user, v in users.items()}
        for movie, users in sums.items()
    }


def _cosine_distance(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    common = sorted(set(a) & set(b))
    if not common:
        return 1.0
    dot = na = nb = 0.0
    for user in common:
        dot += a[user] * b[user]
        na += a[user] ** 2
        nb += b[user] ** 2
    if na == 0.0 or nb == 0.0:
        return 1.0
    return 1.0 - dot / math.sqrt(na * nb)


def cluster_items(ds: Dataset, cfg: RecommenderConfig) -> ClusterAssignment:
    """Agglomerative clustering of rated movies in rating space.

    Distance is 1 - cosine over co-rated users (1 when there are none).
    Merging stops when exactly ``n_clusters`` clusters remain.  Movies at
    distance 0 from each other are indistinguishable and can never be
    separated; if keeping them together cannot yield the requested cluster
    count, that is an error asking for a smaller ``n_clusters``.
    """
    vectors = _item_vectors(ds)
    items = sorted(vectors)
    n = len(items)
    k = cfg.n_clusters
    if n < k:
        raise RecommenderError(
            f"{n} rated movies cannot form {k} clusters; lower n_clusters"
        )
    dist = np.ones((n, n))
    np.fill_diagonal(dist, 0.0)
    for i in range(n):
        for j in range(i + 1, n):
            d = _cosine_distance(vectors[items[i]], vectors[items[j]])
            dist[i, j] = dist[j, i] = d

    # Zero-distance pairs must end up co-clustered.
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] == 0.0:
                parent[find(i)] = find(j)
    n_groups = len({find(i) for i in range(n)})
    if n_groups < k:
        raise RecommenderError(
            f"only {n_groups} distinguishable rating profiles for {k} clusters; "
            "lower n_clusters"
        )

    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    sizes = np.ones(n)
    work = dist.copy()
    np.fill_diagonal(work, np.inf)
    for _ in range(n - k):
        i, j = divmod(int(np.argmin(work)), n)
        if i > j:
            i, j = j, i
        if cfg.linkage == "average":
            new_row = (sizes[i] * work[i] + sizes[j] * work[j]) / (sizes[i] + sizes[j])
        elif cfg.linkage == "complete":
            new_row = np.maximum(work[i], work[j])
        else:
            new_row = np.minimum(work[i], work[j])
        work[i, :] = new_row
        work[:, i] = new_row
        work[i, i] = np.inf
        work[j, :] = np.inf
        work[:, j] = np.inf
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        del members[j]

    cluster_of: dict[str, int] = {}
    roots = sorted(members, key=lambda c: min(members[c]))
    for label, root in enumerate(roots):
        for idx in members[root]:
            cluster_of[items[idx]] = label
    return ClusterAssignment(cluster_of=cluster_of, n_clusters=k)


def condition_profiles(
    ds: Dataset,
    clusters: ClusterAssignment,
    factor_ids: Iterable[str] | None = None,
) -> dict[ConditionKey, ConditionProfile]:
    """Correlate every contextual condition with the ratings of each cluster.

    For a condition c and cluster g, the correlation is between the
    indicator "this rating's situation assigns c" and the rating score,
    over all ratings of movies in g.  By default only the study factors are
    profiled (extra pass-through factors carry no weight in similarity);
    datasets without any study factor profile all their factors.
    """
    if factor_ids is None:
        present = [f.factor_id for f in ds.factors]
        study = [fid for fid in present if fid in STUDY_FACTORS]
        factor_ids = study or present
    factor_ids = list(factor_ids)

    by_cluster: dict[int, list] = {g: [] for g in range(clusters.n_clusters)}
    for r in ds.ratings:
        g = clusters.cluster_of.get(r.movie_id)
        if g is not None:
            by_cluster[g].append(r)

    profiles: dict[ConditionKey, ConditionProfile] = {}
    for fid in factor_ids:
        vocabulary = ds.factor(fid).vocabulary
        for condition in vocabulary:
            pccs: list[float | None] = []
            for g in range(clusters.n_clusters):
                ratings = by_cluster[g]
                if len(ratings) < 2:
                    pccs.append(None)
                    continue
                indicator = [
                    1.0 if r.situation.get(fid) == condition else 0.0 for r in ratings
                ]
                scores = [float(r.score) for r in ratings]
                pccs.append(pearson(indicator, scores))
            profiles[(fid, condition)] = ConditionProfile(tuple(pccs))
    return profiles


def situation_representation(
    situation: ContextualSituation,
    profiles: Mapping[ConditionKey, ConditionProfile],
) -> np.ndarray | None:
    """Mean of the assigned conditions' profile vectors; ``None`` when the
    situation assigns no profiled condition at all."""
    rows = [
        profiles[(fid, condition)].dense()
        for fid, condition in situation.pairs
        if (fid, condition) in profiles
    ]
    if not rows:
        return None
    return np.mean(rows, axis=0)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    sim = float(u @ v) / (nu * nv)
    return max(-1.0, min(1.0, sim))


def situation_similarity(
    a: ContextualSituation,
    b: ContextualSituation,
    profiles: Mapping[ConditionKey, ConditionProfile],
) -> float:
    """Cosine similarity of the two situations' representation vectors."""
    ra = situation_representation(a, profiles)
    rb = situation_representation(b, profiles)
    if ra is None or rb is None:
        raise RecommenderError(
            "situation similarity needs at least one profiled condition on each side"
        )
    return _cosine(ra, rb)


@dataclass(frozen=True)
class LocalSelection:
    """Result of local-dataset selection, including the threshold actually used."""

    dataset: Dataset
    requested_threshold: float
    effective_threshold: float
    used_full_dataset: bool

    @property
    def relaxed(self) -> bool:
        return self.effective_threshold < self.requested_threshold


def select_local_dataset(
    ds: Dataset,
    target: ContextualSituation,
    profiles: Mapping[ConditionKey, ConditionProfile],
    cfg: RecommenderConfig,
) -> LocalSelection:
    """Ratings whose situations are similar to the target above a threshold.

    When fewer than ``min_local_ratings`` ratings qualify, the threshold is
    relaxed in steps of 0.1; at -1 the whole dataset qualifies.  Ratings
    whose situations carry no profiled condition get similarity 0.
    """
    target_repr = situation_representation(target, profiles)
    if target_repr is None:
        raise RecommenderError("target situation has no profiled conditions")

    sim_cache: dict[ContextualSituation, float] = {}

    def sim_of(situation: ContextualSituation) -> float:
        if situation not in sim_cache:
            rep = situation_representation(situation, profiles)
            sim_cache[situation] = 0.0 if rep is None else _cosine(rep, target_repr)
        return sim_cache[situation]

    sims = [sim_of(r.situation) for r in ds.ratings]
    threshold = cfg.similarity_threshold
    while True:
        kept = [r for r, s in zip(ds.ratings, sims) if s >= threshold]
        if len(kept) >= cfg.min_local_ratings or threshold <= -1.0:
            break
        threshold = max(-1.0, round(threshold - 0.1, 10))
    used_full = threshold <= -1.0
    subset = ds.with_ratings(ds.ratings if used_full else kept)
    return LocalSelection(
        dataset=subset,
        requested_threshold=cfg.similarity_threshold,
        effective_threshold=threshold,
        used_full_dataset=used_full,
    )


@dataclass(frozen=True)
class ScoredMovie:
    movie_id: str
    predicted: float


def recommend(
    local: Dataset,
    user_id: str,
    exclude: frozenset[str] | set[str],
    cfg: RecommenderConfig,
) -> list[ScoredMovie]:
    """Item-based k-nearest-neighbour collaborative filtering.

    Item-item similarity is the Pearson correlation over users who rated
    both items (at least two co-raters).  Predictions take the
    deviation-from-item-mean form over the k most similar items the user
    has rated.  A user with no ratings in the local slice falls back to the
    local mean-rating ranking.  Excluded and already-rated movies never
    appear; predictions are clamped to [1, 5].
    """
    vectors = _item_vectors(local)
    if not vectors:
        raise NoCandidatesError("local dataset has no rated items")
    item_means = {m: sum(v.values()) / len(v) for m, v in vectors.items()}
    item_counts = {m: len(v) for m, v in vectors.items()}
    user_rated = {m for m, users in vectors.items() if user_id in users}
    candidates = sorted(set(vectors) - set(exclude) - user_rated)
    if not candidates:
        raise NoCandidatesError("no candidate items remain after exclusion")

    def ranked(scored: list[ScoredMovie]) -> list[ScoredMovie]:
        scored.sort(
            key=lambda s: (-s.predicted, -item_counts[s.movie_id], s.movie_id)
        )
        return scored[: cfg.top_n]

    if not user_rated:
        return ranked(
            [
                ScoredMovie(m, _clamp(item_means[m]))
                for m in candidates
            ]
        )

    rated_list = sorted(user_rated)
    scored = []
    for movie in candidates:
        sims = []
        for other in rated_list:
            common = set(vectors[movie]) & set(vectors[other])
            if len(common) < 2:
                continue
            s = pearson(
                [vectors[movie][u] for u in sorted(common)],
                [vectors[other][u] for u in sorted(common)],
            )
            if s is not None:
                sims.append((s, other))
        sims.sort(key=lambda t: (-t[0], t[1]))
        neighbours = sims[: cfg.neighborhood_k]
        numer = sum(s * (vectors[o][user_id] - item_means[o]) for s, o in neighbours)
        denom = sum(abs(s) for s, _ in neighbours)
        if denom == 0.0:
            prediction = item_means[movie]
        else:
            prediction = item_means[movie] + numer / denom
        scored.append(ScoredMovie(movie, _clamp(prediction)))
    return ranked(scored)


def _clamp(value: float) -> float:
    return max(1.0, min(5.0, value))


@dataclass(frozen=True)
class RecommenderArtifacts:
    """Clusters and condition profiles, built once per dataset."""

    clusters: ClusterAssignment
    profiles: dict[ConditionKey, ConditionProfile]
    config: RecommenderConfig


def build_artifacts(ds: Dataset, cfg: RecommenderConfig) -> RecommenderArtifacts:
    clusters = cluster_items(ds, cfg)
    return RecommenderArtifacts(clusters, condition_profiles(ds, clusters), cfg)


def scaled_config(ds: Dataset) -> RecommenderConfig:
    """Default configuration with the cluster count and local-dataset floor
    scaled down for small datasets."""
    rated = len({r.movie_id for r in ds.ratings})
    return RecommenderConfig(
        n_clusters=max(1, min(10, rated // 5)),
        min_local_ratings=min(50, max(1, ds.n_ratings // 4)),
    )


def recommend_for_situation(
    ds: Dataset,
    artifacts: RecommenderArtifacts,
    user_id: str,
    target: ContextualSituation,
    exclude: frozenset[str] | set[str],
) -> tuple[list[ScoredMovie], LocalSelection]:
    """Select the local dataset for the target situation, then recommend."""
    selection = select_local_dataset(ds, target, artifacts.profiles, artifacts.config)
    items = recommend(selection.dataset, user_id, exclude, artifacts.config)
    return items, selection
