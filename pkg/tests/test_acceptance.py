"""Acceptance suite: every release criterion, at its stated tolerance.

Each test carries a ``criterion`` marker; the conftest hook prints one
PASS/FAIL line per criterion at the end of the run.  One golden case is an
expected failure: the reference Per appraisal vector designates the grade
Good (0.3197) although its largest membership is at Medium (0.3299), so no
argmax classifier can return the designated pair.  That case is marked
xfail(strict) rather than papered over; details in the repo notes.
"""

import json
import random
import time

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient
from scipy import stats as scipy_stats

from explaineval.analytics import one_way_anova, spearman, tukey_hsd
from explaineval.cli import main as cli_main
from explaineval.domain import AppraisalGrade, ExplanationStyle, MetricId
from explaineval.fuzzy import (
    AppraisalVector,
    FuzzyMappingMatrix,
    WeightVector,
    build_mapping_matrix,
    classify,
    compose,
    implied_mean,
)
from explaineval.protocol import (
    Participant,
    begin_trials,
    start_session,
    submit_seed_rating,
)
from explaineval.recommender import (
    RecommenderConfig,
    cluster_items,
    pearson,
    recommend,
    select_local_dataset,
)
from explaineval.service import create_app
from explaineval.simulate import dirac_profile
from explaineval.store import LogicalClock

GOLDEN_VECTORS = {
    ExplanationStyle.AVG: (0.1054, 0.1530, 0.3979, 0.2176, 0.1258),
    ExplanationStyle.CONTENT: (0.0544, 0.1632, 0.3197, 0.3367, 0.1258),
    ExplanationStyle.CONTEXT_AWARE: (0.1938, 0.1667, 0.1530, 0.2006, 0.2857),
    ExplanationStyle.PER: (0.0748, 0.1598, 0.3299, 0.3197, 0.1156),
    ExplanationStyle.SIMI: (0.0442, 0.1292, 0.2142, 0.4217, 0.1904),
    ExplanationStyle.SIMU: (0.0714, 0.1292, 0.3027, 0.3537, 0.1428),
}

_PER_XFAIL = pytest.mark.xfail(
    strict=True,
    reason="reference Per vector: largest membership 0.3299 is at Medium, "
    "not at the designated grade Good (0.3197); argmax classification "
    "cannot produce the designated pair",
)

GOLDEN_CLASSIFICATIONS = [
    pytest.param(ExplanationStyle.AVG, AppraisalGrade.MEDIUM, 0.3979,
                 id="Avg"),
    pytest.param(ExplanationStyle.CONTENT, AppraisalGrade.GOOD, 0.3367,
                 id="Content"),
    pytest.param(ExplanationStyle.CONTEXT_AWARE, AppraisalGrade.VERY_GOOD,
                 0.2857, id="Context-aware"),
    pytest.param(ExplanationStyle.PER, AppraisalGrade.GOOD, 0.3197,
                 id="Per", marks=_PER_XFAIL),
    pytest.param(ExplanationStyle.SIMI, AppraisalGrade.GOOD, 0.4217,
                 id="Simi"),
    pytest.param(ExplanationStyle.SIMU, AppraisalGrade.GOOD, 0.3537,
                 id="Simu"),
]


@pytest.mark.criterion("fuzzy golden classification")
class TestFuzzyGoldenClassification:
    @pytest.mark.parametrize("style,grade,membership", GOLDEN_CLASSIFICATIONS)
    def test_classification_matches_designated_grade(self, style, grade,
                                                     membership):
        result = classify(AppraisalVector(GOLDEN_VECTORS[style]))
        assert result.grade is grade
        assert result.membership == membership

    def test_vectors_sum_to_one_within_published_rounding(self):
        for style, vector in GOLDEN_VECTORS.items():
            assert abs(sum(vector) - 1.0) <= 0.002, style.value

    def test_runtime_under_one_second(self):
        start = time.perf_counter()
        for vector in GOLDEN_VECTORS.values():
            classify(AppraisalVector(vector))
        assert time.perf_counter() - start < 1.0


@pytest.mark.criterion("fuzzy algebra suite (1000 randomized pairs)")
class TestFuzzyAlgebraSuite:
    def test_thousand_randomized_pairs_under_five_seconds(self):
        rng = random.Random(2024)
        tol = 1e-9
        start = time.perf_counter()
        for _ in range(1000):
            weights = self._random_weights(rng)
            matrix = self._random_matrix(rng)

            # Convexity: composition of row-stochastic inputs stays on the
            # simplex.
            e = compose(weights, matrix).e
            assert all(v >= -tol for v in e)
            assert abs(sum(e) - 1.0) <= tol

            # Selection identity.
            idx = rng.randrange(6)
            assert compose(WeightVector.one_hot(6, idx), matrix).e == \
                matrix.row(idx)

            # Linearity in the weights.
            other = self._random_weights(rng)
            alpha = rng.random()
            blended = WeightVector(tuple(
                alpha * a + (1 - alpha) * b
                for a, b in zip(weights.weights, other.weights)
            ))
            lhs = compose(blended, matrix).e
            e2 = compose(other, matrix).e
            rhs = [alpha * a + (1 - alpha) * b for a, b in zip(e, e2)]
            assert all(abs(x - y) <= tol for x, y in zip(lhs, rhs))

            # Permuting factors together in W and R changes nothing.
            perm = list(range(6))
            rng.shuffle(perm)
            permuted = compose(
                WeightVector(tuple(weights.weights[i] for i in perm)),
                FuzzyMappingMatrix(tuple(matrix.entries[i] for i in perm)),
            ).e
            assert all(abs(x - y) <= tol for x, y in zip(e, permuted))
        assert time.perf_counter() - start < 5.0

    @staticmethod
    def _random_weights(rng):
        grains = [rng.randint(0, 1000) for _ in range(6)]
        if sum(grains) == 0:
            grains[0] = 1
        total = sum(grains)
        return WeightVector(tuple(g / total for g in grains))

    @staticmethod
    def _random_matrix(rng):
        rows = []
        for _ in range(6):
            grains = [rng.randint(0, 1000) for _ in range(5)]
            if sum(grains) == 0:
                grains[rng.randrange(5)] = 1
            total = sum(grains)
            rows.append(tuple(g / total for g in grains))
        return FuzzyMappingMatrix(tuple(rows))


@pytest.mark.criterion("equal-weights mean identity (100 cohorts)")
class TestEqualWeightsMeanIdentity:
    def test_hundred_random_cohorts(self):
        rng = random.Random(77)
        for _ in range(100):
            responses = {
                metric: [rng.randint(1, 5) for _ in range(rng.randint(1, 40))]
                for metric in MetricId
            }
            matrix = build_mapping_matrix(responses)
            e = compose(WeightVector.equal(6), matrix)
            factor_means = [sum(v) / len(v) for v in responses.values()]
            expected = sum(factor_means) / len(factor_means)
            assert abs(implied_mean(e, tol=1e-9) - expected) <= 1e-9


@pytest.mark.criterion("membership worked example")
class TestWorkedExample:
    def test_seven_threes_two_fours_one_five(self):
        matrix = build_mapping_matrix(
            {MetricId.EFFICIENCY: [3] * 7 + [4] * 2 + [5]}
        )
        assert matrix.row(0) == (0.0, 0.0, 0.7, 0.2, 0.1)


@pytest.mark.criterion("statistics oracles")
class TestStatisticsOracles:
    SPEARMAN_FIXTURES = [
        ([1, 2, 2, 3, 3, 3, 4, 5], [2, 1, 4, 4, 2, 5, 4, 5]),
        ([5, 3, 1, 4, 2], [1, 2, 3, 4, 5]),
        ([1.5, 2.5, 2.5, 8.0, 4.0, 4.0], [1, 1, 2, 2, 3, 3]),
        ([3, 1, 4, 1, 5, 9, 2, 6, 5, 3], [2, 7, 1, 8, 2, 8, 1, 8, 2, 8]),
        ([10, 20, 30, 40, 50, 60, 70], [3, 1, 4, 1, 5, 9, 2]),
        ([1, 1, 2, 2, 3, 3, 4, 4], [4, 3, 4, 2, 2, 1, 1, 1]),
    ]

    GROUP_FIXTURES = [
        [[1, 2, 3, 4], [2, 3, 4, 5], [5, 6, 7, 8]],
        [[4.1, 4.4, 3.9], [3.1, 2.9, 3.3], [5.0, 5.2, 4.8]],
        [[1, 1, 2, 2], [1, 2, 1, 2]],
        [[10, 12, 14], [11, 13, 15], [12, 14, 16], [20, 22, 24]],
        [[2.5, 3.5, 4.5, 5.5, 6.5], [1.0, 2.0, 3.0], [7.5, 8.5]],
        [[1, 5, 2, 4], [2, 2, 2, 3], [4, 4, 5, 5], [1, 1, 2, 1]],
    ]

    def test_spearman_matches_reference_on_fixtures(self):
        for x, y in self.SPEARMAN_FIXTURES:
            ours = spearman(x, y)
            rho_ref, p_ref = scipy_stats.spearmanr(x, y)
            assert abs(ours.rho - rho_ref) <= 1e-6
            assert abs(ours.p_value - p_ref) <= 1e-6

    def test_spearman_monotone_edges_exact(self):
        up = spearman([1, 2, 3, 4, 5], [10, 20, 30, 40, 50])
        down = spearman([1, 2, 3, 4, 5], [50, 40, 30, 20, 10])
        assert abs(up.rho - 1.0) <= 1e-12
        assert abs(down.rho + 1.0) <= 1e-12
        assert up.p_value == 0.0
        assert down.p_value == 0.0

    def test_anova_matches_reference_on_fixtures(self):
        for groups in self.GROUP_FIXTURES:
            ours = one_way_anova(groups)
            f_ref, p_ref = scipy_stats.f_oneway(*groups)
            assert abs(ours.f - f_ref) <= 1e-6
            assert abs(ours.p_value - p_ref) <= 1e-6

    def test_tukey_matches_reference_on_fixtures(self):
        for groups in self.GROUP_FIXTURES:
            ours = tukey_hsd(groups)
            ref = scipy_stats.tukey_hsd(*groups)
            for pair in ours.pairs:
                assert abs(pair.mean_diff - ref.statistic[pair.i, pair.j]) <= 1e-6
                assert abs(pair.p_value - ref.pvalue[pair.i, pair.j]) <= 1e-6
                assert pair.significant == (ref.pvalue[pair.i, pair.j] < 0.05)


PARTICIPANT = Participant(
    age_band="26-35", gender="female", education="master",
    occupation="researcher", movie_frequency="weekly",
)


@pytest.mark.criterion("recommender properties (50-item dataset)")
class TestRecommenderProperties:
    def test_all_properties_within_thirty_seconds(self, synthetic_ds,
                                                  synthetic_artifacts):
        start = time.perf_counter()
        rng = random.Random(314)

        # Pearson bounds and symmetry over 1000 random pairs.
        for _ in range(1000):
            n = rng.randint(2, 15)
            x = [rng.randint(1, 5) for _ in range(n)]
            y = [rng.randint(1, 5) for _ in range(n)]
            r = pearson(x, y)
            if r is None:
                continue
            assert abs(r) <= 1.0 + 1e-12
            assert r == pearson(y, x)

        # Local-dataset monotonicity across 20 thresholds (pre-relaxation).
        target = None
        for rating in synthetic_ds.ratings:
            if rating.situation.pairs:
                target = rating.situation
                break
        previous = None
        for i in range(20):
            theta = -1.0 + i * (2.0 / 19)
            cfg = RecommenderConfig(similarity_threshold=theta,
                                    min_local_ratings=0)
            kept = frozenset(
                id(r) for r in select_local_dataset(
                    synthetic_ds, target, synthetic_artifacts.profiles, cfg
                ).dataset.ratings
            )
            if previous is not None:
                assert kept <= previous
            previous = kept

        # Recommendations never contain excluded or already-seen movies,
        # across 200 protocol sessions.
        for seed in range(200):
            session = start_session(synthetic_ds, PARTICIPANT, rng_seed=seed)
            for i in range(12):
                session = submit_seed_rating(session, i, (seed + i) % 5 + 1)
            session = begin_trials(session, synthetic_ds, synthetic_artifacts)
            seeds = {t.movie_id for t in session.seed_tasks}
            trial_movies = [t.movie_id for t in session.trials]
            assert not seeds & set(trial_movies)
            assert len(set(trial_movies)) == len(trial_movies) == 6

        # Clustering is invariant to the order of the input rows.
        cfg = synthetic_artifacts.config
        baseline = self._partition(cluster_items(synthetic_ds, cfg))
        rows = list(synthetic_ds.ratings)
        for _ in range(10):
            rng.shuffle(rows)
            shuffled = synthetic_ds.with_ratings(rows)
            assert self._partition(cluster_items(shuffled, cfg)) == baseline

        assert time.perf_counter() - start < 30.0

    @staticmethod
    def _partition(assignment):
        groups = {}
        for movie, cluster in assignment.cluster_of.items():
            groups.setdefault(cluster, set()).add(movie)
        return {frozenset(g) for g in groups.values()}

    def test_direct_recommend_respects_exclusions(self, synthetic_ds,
                                                  synthetic_artifacts):
        rng = random.Random(9)
        users = sorted(synthetic_ds.users)
        movies = sorted(synthetic_ds.movies)
        cfg = synthetic_artifacts.config
        for _ in range(50):
            user = rng.choice(users)
            exclude = frozenset(rng.sample(movies, rng.randint(0, 20)))
            rated = {
                r.movie_id for r in synthetic_ds.ratings if r.user_id == user
            }
            try:
                results = recommend(synthetic_ds, user, exclude, cfg)
            except Exception:
                continue
            for item in results:
                assert item.movie_id not in exclude
                assert item.movie_id not in rated
                assert 1.0 <= item.predicted <= 5.0


@pytest.mark.criterion("end-to-end pipeline identity (Dirac profile)")
class TestPipelineIdentity:
    def test_fifty_dirac_sessions_within_sixty_seconds(self, tmp_path):
        start = time.perf_counter()
        runner = CliRunner()
        profile_path = tmp_path / "dirac.json"
        profile_path.write_text(
            json.dumps(dirac_profile(score=4, diff=0, t_ms=5000)),
            encoding="utf-8",
        )
        log_path = tmp_path / "cohort.ndjson"
        result = runner.invoke(
            cli_main,
            ["simulate", "--sessions", "50", "--seed", "606",
             "--profile", str(profile_path), "--out", str(log_path)],
        )
        assert result.exit_code == 0, result.output

        table4 = json.loads(runner.invoke(
            cli_main, ["analyze", "--log", str(log_path), "--table", "4",
                       "--format", "json"],
        ).output)
        assert len(table4["rows"]) == 6
        for row in table4["rows"].values():
            assert set(row.values()) == {4.0}

        table3 = json.loads(runner.invoke(
            cli_main, ["analyze", "--log", str(log_path), "--table", "3",
                       "--format", "json"],
        ).output)
        for row in table3["rows"].values():
            assert row["mean_diff"] == 0.0
            assert row["mean_time_s"] == 5.0
            assert row["n_trials"] == 50

        table6 = json.loads(runner.invoke(
            cli_main, ["analyze", "--log", str(log_path), "--table", "6",
                       "--format", "json"],
        ).output)
        for row in table6["rows"].values():
            assert row["appraisal"] == [0.0, 0.0, 0.0, 1.0, 0.0]
            assert row["grade"] == "Good"
            assert row["membership"] == 1.0

        assert time.perf_counter() - start < 60.0


DEMOGRAPHICS = {
    "age_band": "26-35",
    "gender": "female",
    "education": "master",
    "occupation": "researcher",
    "movie_frequency": "weekly",
}


def scripted_writes():
    """The canonical 61-write session script (bodies are state-independent)."""
    writes = [("/sessions", DEMOGRAPHICS)]
    writes += [
        (f"@/seed-ratings", {"task_index": i, "score": (i % 5) + 1})
        for i in range(12)
    ]
    for k in range(6):
        writes.append((f"@/trials/{k}/explanation-rating",
                       {"r": 4, "t_ms": 3000 + k}))
        writes.append((f"@/trials/{k}/detail-rating", {"r_prime": 3}))
    writes += [
        ("@/likert", {"style": s.value, "metric": m.value, "score": 4})
        for m in MetricId for s in ExplanationStyle
    ]
    return writes


@pytest.mark.criterion("service durability and blinding")
class TestServiceDurability:
    @staticmethod
    def _app(tmp_path, synthetic_ds, synthetic_artifacts, name):
        ids = iter(f"durable-{i:04d}" for i in range(100))
        return create_app(
            synthetic_ds,
            log_path=tmp_path / name,
            artifacts=synthetic_artifacts,
            clock=LogicalClock(),
            id_factory=lambda: next(ids),
            seed_rng=random.Random(5),
        )

    def _run(self, tmp_path, synthetic_ds, synthetic_artifacts, name,
             restart_each_write):
        writes = scripted_writes()
        sid = None
        app = self._app(tmp_path, synthetic_ds, synthetic_artifacts, name)
        client = TestClient(app)
        for path, body in writes:
            if restart_each_write:
                app.state.store.close()
                app = self._app(tmp_path, synthetic_ds, synthetic_artifacts,
                                name)
                client = TestClient(app)
            url = path.replace("@", f"/sessions/{sid}") if "@" in path else path
            response = client.post(url, json=body)
            assert response.status_code in (200, 201), response.text
            if path == "/sessions":
                sid = response.json()["session_id"]
        export = client.get("/export?format=ndjson").text
        assert client.get(f"/sessions/{sid}/next").json()["kind"] == "complete"
        app.state.store.close()
        return export

    def test_kill_and_restart_after_every_write_is_lossless(
        self, tmp_path, synthetic_ds, synthetic_artifacts
    ):
        reference = self._run(tmp_path, synthetic_ds, synthetic_artifacts,
                              "reference.ndjson", restart_each_write=False)
        interrupted = self._run(tmp_path, synthetic_ds, synthetic_artifacts,
                                "interrupted.ndjson", restart_each_write=True)
        assert interrupted == reference
        assert len(reference.splitlines()) == 61

    def test_explanation_views_are_blinded(self, tmp_path, synthetic_ds,
                                           synthetic_artifacts):
        app = self._app(tmp_path, synthetic_ds, synthetic_artifacts,
                        "blinding.ndjson")
        client = TestClient(app)
        sid = client.post("/sessions", json=DEMOGRAPHICS).json()["session_id"]
        for i in range(12):
            client.post(f"/sessions/{sid}/seed-ratings",
                        json={"task_index": i, "score": 3})
        movie_fields = {"movie", "movie_id", "title", "director", "actors",
                        "genres", "year"}
        for k in range(6):
            payload = client.get(f"/sessions/{sid}/next").json()
            assert payload["kind"] == "trial_explanation"
            assert not movie_fields & set(payload)
            trial = app.state.store.session(sid).trials[k]
            movie = synthetic_ds.movies[trial.movie_id]
            raw = json.dumps(payload)
            assert movie.title not in raw
            assert movie.movie_id not in raw
            client.post(f"/sessions/{sid}/trials/{k}/explanation-rating",
                        json={"r": 4, "t_ms": 1000})
            client.post(f"/sessions/{sid}/trials/{k}/detail-rating",
                        json={"r_prime": 4})
        app.state.store.close()
